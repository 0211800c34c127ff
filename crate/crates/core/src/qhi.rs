//! Channel identification from state trajectories.
//!
//! A qubit channel acts on `vec(ρ)` as a 4×4 superoperator `G`. Its Choi
//! matrix (input ⊗ output ordering) is the index reshuffle
//! `C[2c+a, 2d+b] = G[2a+b, 2c+d]`; the channel is CPTP iff `C ⪰ 0` and
//! `Tr_out C = 1`. Fitting alternates a least-squares gradient step on `G`
//! with a Frobenius projection of `C` onto that set.

use alloc::vec::Vec;

use crate::discriminate::{discriminate, BVector, MixtureParams, Mode};
use crate::error::{Error, Result};
use crate::math::KahanSum;
use crate::qcore::{eigh4, spectral_map4, unvec, vec, ComplexMat2, ComplexMat4, DensityMatrix, C64};
use crate::qst::qst_closed_form;
use crate::readout::ReadoutModel;

pub const CHANNEL_TOL: f64 = 1e-9;

/// `C[2c+a, 2d+b] = G[2a+b, 2c+d]`.
pub fn choi_from_superop(g: &ComplexMat4) -> ComplexMat4 {
    ComplexMat4::from_fn(|r, col| {
        let (c, a) = (r / 2, r % 2);
        let (d, b) = (col / 2, col % 2);
        g[(2 * a + b, 2 * c + d)]
    })
}

/// Inverse of [`choi_from_superop`].
pub fn superop_from_choi(c: &ComplexMat4) -> ComplexMat4 {
    ComplexMat4::from_fn(|r, col| {
        let (a, b) = (r / 2, r % 2);
        let (cc, d) = (col / 2, col % 2);
        c[(2 * cc + a, 2 * d + b)]
    })
}

/// Partial trace over the output factor.
pub fn partial_trace_output(c: &ComplexMat4) -> ComplexMat2 {
    ComplexMat2::from_fn(|r, col| c[(2 * r, 2 * col)] + c[(2 * r + 1, 2 * col + 1)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSuperoperator {
    g: ComplexMat4,
}

impl ChannelSuperoperator {
    /// Validates trace and Hermiticity preservation.
    pub fn new(g: ComplexMat4) -> Result<Self> {
        let s = Self { g };
        let tp = s.trace_preservation_error();
        let hp = choi_from_superop(&g).hermiticity_error();
        if !g.is_finite() || tp > CHANNEL_TOL || hp > CHANNEL_TOL {
            return Err(Error::InvalidParameter {
                name: "superoperator",
                reason: alloc::format!("not trace/Hermiticity preserving (TP {tp:e}, HP {hp:e})"),
            });
        }
        Ok(s)
    }

    pub fn identity() -> Self {
        Self { g: ComplexMat4::identity() }
    }

    pub fn matrix(&self) -> &ComplexMat4 {
        &self.g
    }

    /// `max |vec(1)†·G − vec(1)†|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let one = vec(&ComplexMat2::identity());
        (0..4)
            .map(|c| ((0..4).map(|r| one[r].conj() * self.g[(r, c)]).sum::<C64>() - one[c].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &ComplexMat2) -> ComplexMat2 {
        unvec(&self.g.mul_vec(&vec(rho)))
    }

    pub fn choi(&self) -> ComplexMat4 {
        choi_from_superop(&self.g)
    }

    pub fn distance(&self, other: &ChannelSuperoperator) -> f64 {
        (self.g - other.g).frobenius_norm()
    }
}

/// Hermitian, PSD, output-partial-trace-one Choi matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix {
    c: ComplexMat4,
}

impl ChoiMatrix {
    pub fn new(c: ComplexMat4) -> Result<Self> {
        let herm = c.hermiticity_error();
        let pt = (partial_trace_output(&c) - ComplexMat2::identity()).max_abs_diff(&ComplexMat2::zeros());
        let lo = eigh4(&c).values[0];
        if !c.is_finite() || herm > CHANNEL_TOL || pt > CHANNEL_TOL || lo < -CHANNEL_TOL {
            return Err(Error::InvalidParameter {
                name: "choi",
                reason: alloc::format!("not a CPTP Choi matrix (herm {herm:e}, ptrace {pt:e}, min eig {lo:e})"),
            });
        }
        Ok(Self { c })
    }

    pub fn matrix(&self) -> &ComplexMat4 {
        &self.c
    }

    pub fn superoperator(&self) -> ChannelSuperoperator {
        ChannelSuperoperator { g: superop_from_choi(&self.c) }
    }
}

/// `ρ ↦ UρU†`, i.e. `G = U ⊗ U*`.
pub fn unitary_superoperator(u: &ComplexMat2) -> Result<ChannelSuperoperator> {
    let dev = (u.adjoint() * *u).max_abs_diff(&ComplexMat2::identity());
    if dev > CHANNEL_TOL || !u.is_finite() {
        return Err(Error::NonUnitary(dev));
    }
    Ok(ChannelSuperoperator { g: u.kron(&u.conj()) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: usize,
    pub dt: f64,
    /// Hidden states `ρ_0 … ρ_N`; empty when only observations are known.
    pub states: Vec<DensityMatrix>,
    pub observations: Vec<BVector>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len().max(self.observations.len()).saturating_sub(1)
    }
}

/// `ρ_i = unvec(G·vec(ρ_{i−1}))` for `i = 1..=steps`.
pub fn simulate_trajectory(g: &ChannelSuperoperator, rho0: &DensityMatrix, steps: usize, id: usize, dt: f64) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::ZeroSamples);
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(*rho0);
    for _ in 0..steps {
        let prev = states.last().expect("non-empty").matrix();
        states.push(DensityMatrix::new_unchecked(g.apply(prev).hermitian_part()));
    }
    Ok(Trajectory { id, dt, states, observations: Vec::new() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    /// `b_i = A·vec(ρ_i)`.
    Exact,
    /// Full readout chain per step and axis, discriminated with `theta`.
    Sampled { shots: usize, readout: ReadoutModel, theta: MixtureParams, mode: Mode, seed: u64 },
}

pub fn observe_trajectory(t: &Trajectory, how: &Observation) -> Result<Trajectory> {
    if t.states.is_empty() {
        return Err(Error::Empty("trajectory has no hidden states"));
    }
    let a = crate::qcore::measurement_matrix();
    let observations = t
        .states
        .iter()
        .enumerate()
        .map(|(i, rho)| match how {
            Observation::Exact => Ok(BVector::exact(a.apply_density(rho))),
            Observation::Sampled { shots, readout, theta, mode, seed } => {
                let step_seed = seed ^ ((t.id as u64) << 32 | i as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
                let data = readout.simulate_all(rho, *shots, step_seed)?;
                let mut b = BVector::exact([0.0; 3]);
                for (k, d) in data.iter().enumerate() {
                    let r = discriminate(d, theta, *mode)?;
                    b.b[k] = r.b;
                    b.delta[k] = r.delta_b;
                }
                Ok(b)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { observations, ..t.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpProjection {
    pub choi: ChoiMatrix,
    pub iterations: usize,
    pub converged: bool,
}

pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;
const DYKSTRA_TOL: f64 = 1e-13;

fn project_psd(m: &ComplexMat4) -> ComplexMat4 {
    spectral_map4(&eigh4(m), |x| x.max(0.0)).hermitian_part()
}

/// Frobenius projection onto `{Tr_out C = 1}`: `C − ½(Tr_out C − 1) ⊗ 1`.
fn project_partial_trace(m: &ComplexMat4) -> ComplexMat4 {
    let excess = (partial_trace_output(m) - ComplexMat2::identity()).scale_re(0.5);
    *m - excess.kron(&ComplexMat2::identity())
}

/// Nearest CPTP Choi matrix by Dykstra's alternating projections.
pub fn cptp_project(h: &ComplexMat4) -> CptpProjection {
    let mut x = h.hermitian_part();
    let mut p = ComplexMat4::zeros();
    let mut q = ComplexMat4::zeros();
    let scale = 1.0 + x.frobenius_norm();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < DYKSTRA_MAX_SWEEPS {
        iterations += 1;
        let y = project_psd(&(x + p));
        p = x + p - y;
        let next = project_partial_trace(&(y + q));
        q = y + q - next;
        let moved = (next - x).frobenius_norm() + (next - y).frobenius_norm();
        x = next;
        if moved <= DYKSTRA_TOL * scale {
            converged = true;
            break;
        }
    }
    // Land on the PSD side and restore the trace condition exactly.
    let c = project_partial_trace(&project_psd(&x)).hermitian_part();
    CptpProjection { choi: ChoiMatrix { c }, iterations, converged }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSource {
    /// Use the hidden states directly.
    FromStates,
    /// Map every observation through closed-form QST first.
    FromQst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFit {
    pub channel: ChannelSuperoperator,
    pub loss: f64,
    /// Loss after every projected step, starting with the projected
    /// least-squares solution.
    pub loss_curve: Vec<f64>,
    /// Loss of the unconstrained least-squares solution.
    pub unconstrained_loss: f64,
    /// The state data do not span all four directions of `vec(ρ)`, so the
    /// unconstrained least-squares problem has many minimizers.
    pub non_unique: bool,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once the loss changes by less than this between steps...
    pub loss_tol: f64,
    /// ...and the superoperator moves by less than this (Frobenius).
    pub step_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 200_000, loss_tol: 1e-10, step_tol: 1e-10 }
    }
}

struct Pairs {
    prev: Vec<[C64; 4]>,
    next: Vec<[C64; 4]>,
}

impl Pairs {
    fn loss(&self, g: &ComplexMat4) -> f64 {
        let mut acc = KahanSum::new();
        for (x, y) in self.prev.iter().zip(&self.next) {
            let gx = g.mul_vec(x);
            for k in 0..4 {
                acc.add((y[k] - gx[k]).norm_sqr());
            }
        }
        acc.value()
    }
}

fn outer_sum(a: &[[C64; 4]], b: &[[C64; 4]]) -> ComplexMat4 {
    let mut m = ComplexMat4::zeros();
    for (u, v) in a.iter().zip(b) {
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] += u[r] * v[c].conj();
            }
        }
    }
    m
}

fn project_channel(g: &ComplexMat4) -> ComplexMat4 {
    superop_from_choi(cptp_project(&choi_from_superop(g)).choi.matrix())
}

fn state_sequences(trajectories: &[Trajectory], source: FitSource) -> Result<Vec<Vec<ComplexMat2>>> {
    trajectories
        .iter()
        .map(|t| match source {
            FitSource::FromStates => {
                if t.states.len() < 2 {
                    return Err(Error::Empty("trajectory needs at least 2 states"));
                }
                Ok(t.states.iter().map(|s| *s.matrix()).collect())
            }
            FitSource::FromQst => {
                if t.observations.len() < 2 {
                    return Err(Error::Empty("trajectory needs at least 2 observations"));
                }
                t.observations.iter().map(|b| qst_closed_form(b).map(|r| *r.rho.matrix())).collect()
            }
        })
        .collect()
}

/// Least-squares channel fit under the CPTP constraint.
pub fn fit_channel(trajectories: &[Trajectory], source: FitSource, opts: &FitOptions) -> Result<ChannelFit> {
    if trajectories.is_empty() {
        return Err(Error::Empty("no trajectories"));
    }
    let seqs = state_sequences(trajectories, source)?;
    let mut pairs = Pairs { prev: Vec::new(), next: Vec::new() };
    for seq in &seqs {
        for w in seq.windows(2) {
            pairs.prev.push(vec(&w[0]));
            pairs.next.push(vec(&w[1]));
        }
    }
    let gram = outer_sum(&pairs.prev, &pairs.prev);
    let cross = outer_sum(&pairs.next, &pairs.prev);
    let eig = eigh4(&gram);
    let top = eig.values[3].max(0.0);
    let cutoff = 1e-10 * top.max(f64::MIN_POSITIVE);
    let non_unique = eig.values.iter().any(|&l| l <= cutoff);
    let pinv = spectral_map4(&eig, |l| if l > cutoff { 1.0 / l } else { 0.0 });
    let g_ls = cross * pinv;
    let unconstrained_loss = pairs.loss(&g_ls);

    // Projected gradient with step 1/L, L = 2·λ_max(XX†).
    let step = if top > 0.0 { 1.0 / (2.0 * top) } else { 0.0 };
    let mut g = project_channel(&g_ls);
    let mut loss = pairs.loss(&g);
    let mut curve = alloc::vec![loss];
    let mut iterations = 0;
    let mut converged = step == 0.0;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let grad = (g * gram - cross).scale_re(2.0);
        let next = project_channel(&(g - grad.scale_re(step)));
        let next_loss = pairs.loss(&next);
        let moved = (next - g).frobenius_norm();
        g = next;
        let change = (loss - next_loss).abs();
        loss = next_loss;
        curve.push(loss);
        if change < opts.loss_tol && moved < opts.step_tol {
            converged = true;
        }
    }
    Ok(ChannelFit {
        channel: ChannelSuperoperator { g },
        loss,
        loss_curve: curve,
        unconstrained_loss,
        non_unique,
        iterations,
        converged,
    })
}
