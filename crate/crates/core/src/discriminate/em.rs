//! Expectation–maximization for a two-component bivariate Gaussian mixture.

use alloc::vec::Vec;

use super::params::{sym2_eigenvalues, ComponentParams, MixtureParams, NoiseDisc, Sym2, Vec2};
use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::rng::{SeededRng, Stream};

/// Covariance floor applied to collapsed components.
pub const COV_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmInit {
    /// k-means++ seeding followed by one hard assignment pass.
    KMeansPlusPlus { seed: u64 },
    Provided(MixtureParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub init: EmInit,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { init: EmInit::KMeansPlusPlus { seed: 0 }, max_iter: 500, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    /// Fitted mixture; `zero` is the component with the larger first mean coordinate.
    pub params: MixtureParams,
    /// Total log-likelihood before each M-step, then at the returned parameters.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when a component lost all responsibility or its covariance had to be floored.
    pub degenerate: bool,
}

fn floor_cov(cov: Sym2) -> (Sym2, bool) {
    if sym2_eigenvalues(&cov)[0] >= COV_FLOOR {
        return (cov, false);
    }
    let off = 0.5 * (cov[0][1] + cov[1][0]);
    ([[cov[0][0] + COV_FLOOR, off], [off, cov[1][1] + COV_FLOOR]], true)
}

fn weighted_component(points: &[Vec2], resp: impl Fn(usize) -> f64, n: usize) -> (ComponentParams, bool) {
    let mass: f64 = KahanSum::from_iter((0..points.len()).map(&resp)).value();
    if mass <= 1e-12 * n as f64 {
        let cov = [[COV_FLOOR, 0.0], [0.0, COV_FLOOR]];
        let comp = ComponentParams::new(0.0, [0.0, 0.0], cov).expect("floor covariance is valid");
        return (comp, true);
    }
    let mut mean = [0.0; 2];
    for (k, p) in points.iter().enumerate() {
        let w = resp(k);
        mean[0] += w * p[0];
        mean[1] += w * p[1];
    }
    mean = mean.map(|m| m / mass);
    let mut cov = [[0.0; 2]; 2];
    for (k, p) in points.iter().enumerate() {
        let w = resp(k);
        let d = [p[0] - mean[0], p[1] - mean[1]];
        cov[0][0] += w * d[0] * d[0];
        cov[0][1] += w * d[0] * d[1];
        cov[1][1] += w * d[1] * d[1];
    }
    cov[0][0] /= mass;
    cov[0][1] /= mass;
    cov[1][1] /= mass;
    cov[1][0] = cov[0][1];
    let (cov, floored) = floor_cov(cov);
    let comp = ComponentParams::new((mass / n as f64).clamp(0.0, 1.0), mean, cov).expect("floored covariance is valid");
    (comp, floored)
}

fn kmeans_pp_init(points: &[Vec2], seed: u64) -> (MixtureParams, bool) {
    let mut rng = SeededRng::new(seed, Stream::Init);
    let first = points[rng.below(points.len())];
    let d2: Vec<f64> = points.iter().map(|p| (p[0] - first[0]).powi(2) + (p[1] - first[1]).powi(2)).collect();
    let total: f64 = d2.iter().sum();
    let second = if total > 0.0 {
        let mut target = rng.uniform() * total;
        let mut pick = points.len() - 1;
        for (k, &w) in d2.iter().enumerate() {
            if target < w {
                pick = k;
                break;
            }
            target -= w;
        }
        points[pick]
    } else {
        first
    };
    let nearest_first: Vec<bool> = points
        .iter()
        .map(|p| {
            let a = (p[0] - first[0]).powi(2) + (p[1] - first[1]).powi(2);
            let b = (p[0] - second[0]).powi(2) + (p[1] - second[1]).powi(2);
            a <= b
        })
        .collect();
    let n = points.len();
    let (c0, f0) = weighted_component(points, |k| if nearest_first[k] { 1.0 } else { 0.0 }, n);
    let (c1, f1) = weighted_component(points, |k| if nearest_first[k] { 0.0 } else { 1.0 }, n);
    (MixtureParams { zero: c0, one: c1, noise_weight: 0.0, noise: NoiseDisc::default() }, f0 || f1)
}

/// Responsibilities of the `zero` component and the total log-likelihood.
fn e_step(points: &[Vec2], m: &MixtureParams) -> (Vec<f64>, f64) {
    let mut ll = KahanSum::new();
    let lw0 = if m.zero.weight > 0.0 { math::ln(m.zero.weight) } else { f64::NEG_INFINITY };
    let lw1 = if m.one.weight > 0.0 { math::ln(m.one.weight) } else { f64::NEG_INFINITY };
    let resp = points
        .iter()
        .map(|&p| {
            let a = lw0 + m.zero.log_density(p);
            let b = lw1 + m.one.log_density(p);
            let hi = a.max(b);
            let ea = math::exp(a - hi);
            let eb = math::exp(b - hi);
            ll.add(hi + math::ln(ea + eb));
            ea / (ea + eb)
        })
        .collect();
    (resp, ll.value())
}

/// Total log-likelihood of `points` under the two signal components.
pub fn log_likelihood(points: &[Vec2], m: &MixtureParams) -> f64 {
    e_step(points, m).1
}

fn order_components(m: MixtureParams) -> MixtureParams {
    if m.one.mean[0] > m.zero.mean[0] {
        MixtureParams { zero: m.one, one: m.zero, ..m }
    } else {
        m
    }
}

pub fn em_fit(points: &[Vec2], opts: &EmOptions) -> Result<EmFit> {
    if points.len() < 4 {
        return Err(Error::Empty("EM needs at least 4 samples"));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter { name: "max_iter", reason: "must be at least 1".into() });
    }
    let n = points.len();
    let (mut params, mut degenerate) = match opts.init {
        EmInit::KMeansPlusPlus { seed } => kmeans_pp_init(points, seed),
        EmInit::Provided(m) => (MixtureParams::two_component(m.zero, m.one)?, false),
    };
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let (resp, ll) = e_step(points, &params);
        if let Some(&prev) = trace.last() {
            if (ll - prev).abs() <= opts.tol * f64::abs(prev) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        let (c0, f0) = weighted_component(points, |k| resp[k], n);
        let (c1, f1) = weighted_component(points, |k| 1.0 - resp[k], n);
        degenerate |= f0 || f1;
        params = MixtureParams { zero: c0, one: c1, ..params };
        iterations += 1;
    }
    if !converged {
        trace.push(log_likelihood(points, &params));
    }
    Ok(EmFit { params: order_components(params), log_likelihood: trace, iterations, converged, degenerate })
}
