//! Readout-chain simulation: projective outcome counts, then level-1 I-Q
//! samples from a contaminated Gaussian mixture.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::discriminate::params::{ComponentParams, MixtureParams, NoiseDisc, Vec2};
use crate::error::{Error, Result};
use crate::math;
use crate::qcore::{Axis, DensityMatrix};
use crate::rng::{axis_seed, SeededRng, Stream};

/// Ground-truth provenance of a simulated shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Zero,
    One,
    Noise,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Zero => "zero",
            Label::One => "one",
            Label::Noise => "noise",
        }
    }

    pub fn from_name(s: &str) -> Option<Label> {
        match s {
            "zero" => Some(Label::Zero),
            "one" => Some(Label::One),
            "noise" => Some(Label::Noise),
            _ => None,
        }
    }
}

/// One point of the I-Q plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IQSample {
    pub i: f64,
    pub q: f64,
    pub truth: Option<Label>,
}

impl IQSample {
    pub fn new(i: f64, q: f64, truth: Option<Label>) -> Self {
        Self { i, q, truth }
    }

    pub fn point(&self) -> Vec2 {
        [self.i, self.q]
    }
}

/// The shots recorded for one Pauli observable, in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct IQDataset {
    pub observable: Axis,
    pub samples: Vec<IQSample>,
    pub seed: u64,
    pub mixture: Option<MixtureParams>,
}

impl IQDataset {
    pub fn new(observable: Axis, samples: Vec<IQSample>, seed: u64, mixture: Option<MixtureParams>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("dataset has no samples"));
        }
        if samples.iter().any(|s| !(s.i.is_finite() && s.q.is_finite())) {
            return Err(Error::InvalidParameter { name: "samples", reason: "non-finite I-Q coordinate".into() });
        }
        Ok(Self { observable, samples, seed, mixture })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(IQSample::point)
    }

    /// Counts of (zero, one, noise) truth labels.
    pub fn truth_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.samples {
            match s.truth {
                Some(Label::Zero) => counts[0] += 1,
                Some(Label::One) => counts[1] += 1,
                Some(Label::Noise) => counts[2] += 1,
                None => {}
            }
        }
        counts
    }

    /// Split into the first `k` samples and the rest.
    pub fn split_at(&self, k: usize) -> (Vec<IQSample>, Vec<IQSample>) {
        let k = k.min(self.samples.len());
        (self.samples[..k].to_vec(), self.samples[k..].to_vec())
    }
}

/// Additive contamination: weight α₂ of uniform-disc noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub weight: f64,
    pub disc: NoiseDisc,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        Self { weight: 0.0, disc: NoiseDisc::default() }
    }

    /// Number of noise shots accompanying `signal` signal shots.
    pub fn noise_count(&self, signal: usize) -> usize {
        if self.weight <= 0.0 {
            return 0;
        }
        math::floor(self.weight * signal as f64 / (1.0 - self.weight)) as usize
    }
}

/// Projective outcome counts `(n0, n1)` of `n` shots along `axis`.
pub fn sample_outcomes(rho: &DensityMatrix, axis: Axis, n: usize, seed: u64) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let p0 = (0.5 * (1.0 + rho.expectation(axis))).clamp(0.0, 1.0);
    let mut rng = SeededRng::new(seed, Stream::Outcomes);
    let n0 = (0..n).filter(|_| rng.bernoulli(p0)).count();
    Ok((n0, n - n0))
}

fn gaussian_draw(rng: &mut SeededRng, c: &ComponentParams) -> Vec2 {
    let l = c.cholesky();
    let z = [rng.standard_normal(), rng.standard_normal()];
    [c.mean[0] + l[0][0] * z[0], c.mean[1] + l[1][0] * z[0] + l[1][1] * z[1]]
}

fn disc_draw(rng: &mut SeededRng, d: &NoiseDisc) -> Vec2 {
    let r = d.radius * math::sqrt(rng.uniform());
    let a = TAU * rng.uniform();
    [d.center[0] + r * math::cos(a), d.center[1] + r * math::sin(a)]
}

/// Draws `n0` shots from θ0, `n1` from θ1 and the matching number of
/// contamination shots, then shuffles them.
pub fn synthesize_iq(
    axis: Axis,
    n0: usize,
    n1: usize,
    theta0: &ComponentParams,
    theta1: &ComponentParams,
    contamination: &ContaminationSpec,
    seed: u64,
) -> Result<IQDataset> {
    if !(0.0..1.0).contains(&contamination.weight) {
        return Err(Error::InvalidWeights(contamination.weight));
    }
    let n_noise = contamination.noise_count(n0 + n1);
    let total = n0 + n1 + n_noise;
    if total == 0 {
        return Err(Error::Empty("no shots requested"));
    }
    let mut rng = SeededRng::new(seed, Stream::IqCloud);
    let mut samples = Vec::with_capacity(total);
    for (count, comp, label) in [(n0, theta0, Label::Zero), (n1, theta1, Label::One)] {
        for _ in 0..count {
            let [i, q] = gaussian_draw(&mut rng, comp);
            samples.push(IQSample::new(i, q, Some(label)));
        }
    }
    for _ in 0..n_noise {
        let [i, q] = disc_draw(&mut rng, &contamination.disc);
        samples.push(IQSample::new(i, q, Some(Label::Noise)));
    }
    rng.shuffle(&mut samples);
    let t = total as f64;
    let mixture = MixtureParams::new(
        theta0.with_weight(n0 as f64 / t),
        theta1.with_weight(n1 as f64 / t),
        n_noise as f64 / t,
        contamination.disc,
    )?;
    IQDataset::new(axis, samples, seed, Some(mixture))
}

/// Settings shared by the three per-axis readout simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutModel {
    pub zero: ComponentParams,
    pub one: ComponentParams,
    pub contamination: ContaminationSpec,
}

impl ReadoutModel {
    pub fn from_mixture(m: &MixtureParams) -> Self {
        Self { zero: m.zero, one: m.one, contamination: ContaminationSpec { weight: m.noise_weight, disc: m.noise } }
    }

    /// Counts then I-Q cloud for one axis, seeded from `base_seed` and the axis.
    pub fn simulate_axis(&self, rho: &DensityMatrix, axis: Axis, shots: usize, base_seed: u64) -> Result<IQDataset> {
        let seed = axis_seed(base_seed, axis);
        let (n0, n1) = sample_outcomes(rho, axis, shots, seed)?;
        synthesize_iq(axis, n0, n1, &self.zero, &self.one, &self.contamination, seed)
    }

    pub fn simulate_all(&self, rho: &DensityMatrix, shots: usize, base_seed: u64) -> Result<[IQDataset; 3]> {
        let [x, y, z] = Axis::ALL.map(|a| self.simulate_axis(rho, a, shots, base_seed));
        Ok([x?, y?, z?])
    }
}
