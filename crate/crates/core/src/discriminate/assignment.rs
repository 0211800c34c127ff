//! Capacitated maximum-likelihood assignment of samples to the zero, one and
//! noise classes.
//!
//! The 0/1 program (one class per sample, prescribed class sizes) is a
//! transportation problem; its constraint matrix is totally unimodular, so
//! the LP relaxation has an integral optimum. We solve it as a min-cost flow
//! with successive shortest paths on the residual graph. With three classes
//! the residual graph collapses onto the class nodes: the cheapest way to
//! move flow from class `a` to class `b` is the member of `a` with the
//! smallest reassignment cost, kept in a lazy heap per ordered pair.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use super::classify::{MembershipMatrix, Mode};
use super::params::MixtureParams;
use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::readout::IQDataset;

pub const CLASSES: usize = 3;

/// Largest-remainder rounding of `weights·n`; sums to `n` exactly.
pub fn capacities(weights: [f64; CLASSES], n: usize) -> Result<[usize; CLASSES]> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(sum));
    }
    let quotas = weights.map(|w| w * n as f64);
    let mut caps = quotas.map(|q| math::floor(q) as usize);
    let assigned: usize = caps.iter().sum();
    let mut order = [0usize, 1, 2];
    // Larger remainder first, lower index on ties.
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - math::floor(quotas[a]);
        let rb = quotas[b] - math::floor(quotas[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        caps[k] += 1;
    }
    Ok(caps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

type MoveHeap = BinaryHeap<Reverse<(Key, usize)>>;

struct Residual<'a> {
    cost: &'a [[f64; CLASSES]],
    class_of: Vec<usize>,
    // heaps[a][b]: members of `a` keyed by the cost of moving them to `b`.
    heaps: [[MoveHeap; CLASSES]; CLASSES],
}

impl<'a> Residual<'a> {
    fn new(cost: &'a [[f64; CLASSES]], class_of: Vec<usize>) -> Self {
        let mut r = Residual { cost, class_of, heaps: Default::default() };
        for s in 0..cost.len() {
            r.index(s);
        }
        r
    }

    fn index(&mut self, s: usize) {
        let a = self.class_of[s];
        for b in 0..CLASSES {
            if b != a {
                let delta = self.cost[s][b] - self.cost[s][a];
                self.heaps[a][b].push(Reverse((Key(delta), s)));
            }
        }
    }

    /// Cheapest live member of `a` to move into `b`.
    fn best_move(&mut self, a: usize, b: usize) -> Option<(f64, usize)> {
        let heap = &mut self.heaps[a][b];
        while let Some(&Reverse((Key(delta), s))) = heap.peek() {
            if self.class_of[s] == a {
                return Some((delta, s));
            }
            heap.pop();
        }
        None
    }

    fn relocate(&mut self, s: usize, to: usize) {
        self.class_of[s] = to;
        self.index(s);
    }
}

/// Minimum-cost assignment of each sample to one class with exact class
/// sizes `caps`. `cost[s][c]` is the cost of putting sample `s` in class `c`.
pub fn min_cost_assignment(cost: &[[f64; CLASSES]], caps: [usize; CLASSES]) -> Result<Vec<usize>> {
    let n = cost.len();
    if caps.iter().sum::<usize>() != n {
        return Err(Error::InfeasibleCapacities { capacities: caps, samples: n });
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter { name: "cost", reason: "assignment costs must be finite".into() });
    }
    // Cheapest class per sample (lowest index on ties) is optimal without
    // column constraints and leaves no negative cycle in the residual graph.
    let start: Vec<usize> = cost
        .iter()
        .map(|row| (0..CLASSES).fold(0, |best, c| if row[c] < row[best] { c } else { best }))
        .collect();
    let mut count = [0usize; CLASSES];
    for &c in &start {
        count[c] += 1;
    }
    let mut res = Residual::new(cost, start);
    while (0..CLASSES).any(|c| count[c] > caps[c]) {
        // Bellman–Ford over the class graph from every over-full class.
        let mut dist = [f64::INFINITY; CLASSES];
        let mut pred: [Option<(usize, usize)>; CLASSES] = [None; CLASSES];
        for c in 0..CLASSES {
            if count[c] > caps[c] {
                dist[c] = 0.0;
            }
        }
        let mut edges = [[None; CLASSES]; CLASSES];
        for a in 0..CLASSES {
            for b in 0..CLASSES {
                if a != b {
                    edges[a][b] = res.best_move(a, b);
                }
            }
        }
        for _ in 0..CLASSES - 1 {
            for a in 0..CLASSES {
                if !dist[a].is_finite() {
                    continue;
                }
                for b in 0..CLASSES {
                    if let Some((w, s)) = edges[a][b] {
                        if dist[a] + w < dist[b] - 1e-15 * (1.0 + dist[b].abs().min(1e300)) {
                            dist[b] = dist[a] + w;
                            pred[b] = Some((a, s));
                        }
                    }
                }
            }
        }
        let sink = (0..CLASSES)
            .filter(|&c| count[c] < caps[c] && dist[c].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
            .ok_or(Error::InfeasibleCapacities { capacities: caps, samples: n })?;
        // Collect the path before moving anything so each hop uses an
        // original member of its class.
        let mut hops = Vec::with_capacity(CLASSES);
        let mut at = sink;
        while let Some((from, s)) = pred[at] {
            hops.push((s, at));
            at = from;
            if hops.len() > CLASSES {
                return Err(Error::InvalidParameter { name: "cost", reason: "negative cycle in residual graph".into() });
            }
        }
        count[at] -= 1;
        count[sink] += 1;
        for (s, to) in hops {
            res.relocate(s, to);
        }
    }
    Ok(canonicalize_ties(cost, res.class_of))
}

/// Among samples with identical cost rows, hand out their classes in
/// ascending class order by ascending sample index.
fn canonicalize_ties(cost: &[[f64; CLASSES]], mut class_of: Vec<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cost.len()).collect();
    let bits = |s: usize| cost[s].map(f64::to_bits);
    idx.sort_by(|&a, &b| bits(a).cmp(&bits(b)).then(a.cmp(&b)));
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && bits(idx[end]) == bits(idx[start]) {
            end += 1;
        }
        let mut classes: Vec<usize> = idx[start..end].iter().map(|&s| class_of[s]).collect();
        classes.sort_unstable();
        for (k, &s) in idx[start..end].iter().enumerate() {
            class_of[s] = classes[k];
        }
        start = end;
    }
    class_of
}

/// Per-class log-likelihoods: full Gaussian log-density for the signal
/// classes, `log g` for noise.
pub fn log_likelihoods(d: &IQDataset, theta: &MixtureParams) -> Vec<[f64; CLASSES]> {
    let log_noise = math::ln(theta.noise.density());
    d.points().map(|x| [theta.zero.log_density(x), theta.one.log_density(x), log_noise]).collect()
}

/// Assignment objective `Σ_s loglik_{class(s)}(x_s)`.
pub fn assignment_objective(loglik: &[[f64; CLASSES]], class_of: &[usize]) -> f64 {
    KahanSum::from_iter(loglik.iter().zip(class_of).map(|(row, &c)| row[c])).value()
}

/// Likelihood-maximizing assignment with class sizes rounded from `alpha`.
pub fn assignment_solve(d: &IQDataset, theta: &MixtureParams, alpha: [f64; CLASSES]) -> Result<MembershipMatrix> {
    let caps = capacities(alpha, d.len())?;
    let loglik = log_likelihoods(d, theta);
    let cost: Vec<[f64; CLASSES]> = loglik.iter().map(|r| r.map(|l| -l)).collect();
    let class_of = min_cost_assignment(&cost, caps)?;
    let rows = class_of
        .iter()
        .map(|&c| {
            let mut row = [0.0; CLASSES];
            row[c] = 1.0;
            row
        })
        .collect();
    Ok(MembershipMatrix { rows, mode: Mode::Assignment })
}

/// Maximum-likelihood signal weights for fixed component shapes and a known
/// noise weight (EM over the weights only).
pub fn estimate_weights(d: &IQDataset, theta: &MixtureParams, max_iter: usize) -> [f64; CLASSES] {
    let noise = theta.noise_weight;
    let signal = 1.0 - noise;
    let dens: Vec<[f64; CLASSES]> = d
        .points()
        .map(|x| {
            let g = if theta.noise.contains(x) { theta.noise.density() } else { 0.0 };
            [math::exp(theta.zero.log_density(x)), math::exp(theta.one.log_density(x)), g]
        })
        .collect();
    let mut share = 0.5;
    for _ in 0..max_iter {
        let w = [signal * share, signal * (1.0 - share), noise];
        let mut mass = [KahanSum::new(), KahanSum::new()];
        for p in &dens {
            let total = w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
            if total > 0.0 {
                mass[0].add(w[0] * p[0] / total);
                mass[1].add(w[1] * p[1] / total);
            }
        }
        let (m0, m1) = (mass[0].value(), mass[1].value());
        let next = if m0 + m1 > 0.0 { m0 / (m0 + m1) } else { 0.5 };
        let done = (next - share).abs() < 1e-12;
        share = next;
        if done {
            break;
        }
    }
    [signal * share, signal * (1.0 - share), noise]
}
