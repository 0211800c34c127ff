//! Per-sample discrimination rules and the b-estimators built on them.

use alloc::vec::Vec;

use super::params::{ComponentParams, Vec2};
use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::readout::Label;

/// Which lower-level rule turns I-Q points into memberships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Hard,
    Soft,
    Assignment,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Hard => "hard",
            Mode::Soft => "soft",
            Mode::Assignment => "assignment",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        match s {
            "hard" => Some(Mode::Hard),
            "soft" => Some(Mode::Soft),
            "assignment" => Some(Mode::Assignment),
            _ => None,
        }
    }
}

/// Per-sample weights `(γ_zero, γ_one, γ_noise)`, each row summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    pub rows: Vec<[f64; 3]>,
    pub mode: Mode,
}

impl MembershipMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Effective (zero, one) counts: column sums of γ.
    pub fn effective_counts(&self) -> (f64, f64) {
        let n0: KahanSum = self.rows.iter().map(|r| r[0]).collect();
        let n1: KahanSum = self.rows.iter().map(|r| r[1]).collect();
        (n0.value(), n1.value())
    }

    pub fn hard_labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.rows.iter().map(|r| {
            if r[2] > r[0] && r[2] > r[1] {
                Label::Noise
            } else if r[1] > r[0] {
                Label::One
            } else {
                Label::Zero
            }
        })
    }
}

/// Empirical Pauli expectations with their binomial uncertainties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BVector {
    pub b: [f64; 3],
    pub delta: [f64; 3],
}

impl BVector {
    pub fn exact(b: [f64; 3]) -> Self {
        Self { b, delta: [0.0; 3] }
    }
}

pub fn mahalanobis_sq(x: Vec2, c: &ComponentParams) -> f64 {
    c.mahalanobis_sq(x)
}

/// Quadratic-form matrix with `(x,1)ᵀF(x,1) = −(x−μ)ᵀΣ⁻¹(x−μ)`.
pub fn f_matrix(c: &ComponentParams) -> [[f64; 3]; 3] {
    let s = c.cov_inv();
    let mu = c.mean;
    let smu = [s[0][0] * mu[0] + s[0][1] * mu[1], s[1][0] * mu[0] + s[1][1] * mu[1]];
    let mu_s_mu = mu[0] * smu[0] + mu[1] * smu[1];
    [
        [-s[0][0], -s[0][1], smu[0]],
        [-s[1][0], -s[1][1], smu[1]],
        [smu[0], smu[1], -mu_s_mu],
    ]
}

/// Nearest component in Mahalanobis distance; ties go to `Zero`.
pub fn classify_hard(x: Vec2, theta0: &ComponentParams, theta1: &ComponentParams) -> Label {
    if theta0.mahalanobis_sq(x) <= theta1.mahalanobis_sq(x) {
        Label::Zero
    } else {
        Label::One
    }
}

/// Softmax of `X_i = −d_i²`, shifted by the maximum so it never overflows.
pub fn soft_membership(x: Vec2, theta0: &ComponentParams, theta1: &ComponentParams) -> (f64, f64) {
    let x0 = -theta0.mahalanobis_sq(x);
    let x1 = -theta1.mahalanobis_sq(x);
    if x0 == x1 {
        return (0.5, 0.5);
    }
    // The losing side gets exp(−|gap|)/(1 + exp(−|gap|)).
    let t = math::exp(-(x0 - x1).abs());
    let small = t / (1.0 + t);
    let large = 1.0 - small;
    if x0 > x1 {
        (large, small)
    } else {
        (small, large)
    }
}

/// `(n0 − n1)/(n0 + n1)`.
pub fn hard_b(n0: u64, n1: u64) -> Result<f64> {
    let n = n0 + n1;
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    Ok((n0 as f64 - n1 as f64) / n as f64)
}

/// `2·√(n0·n1/n³)`; accepts fractional (effective) counts.
pub fn delta_b(n0: f64, n1: f64) -> f64 {
    let n = n0 + n1;
    if n <= 0.0 {
        return 0.0;
    }
    (2.0 * math::sqrt(n0 * n1) / (n * math::sqrt(n))).clamp(0.0, 1.0)
}

/// `Σ(γ0 − γ1) / Σ(γ0 + γ1)`; noise mass is excluded from the count.
pub fn soft_b(m: &MembershipMatrix) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::Empty("membership matrix has no rows"));
    }
    let diff: KahanSum = m.rows.iter().map(|r| r[0] - r[1]).collect();
    let mass: KahanSum = m.rows.iter().map(|r| r[0] + r[1]).collect();
    if mass.value() <= 0.0 {
        return Err(Error::Empty("all membership mass is assigned to noise"));
    }
    Ok((diff.value() / mass.value()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededRng, Stream};

    fn reference() -> (ComponentParams, ComponentParams) {
        (
            ComponentParams::isotropic(0.5, [2.5, 2.0], 1.0).unwrap(),
            ComponentParams::isotropic(0.5, [-2.5, 2.0], 1.0).unwrap(),
        )
    }

    fn quad(f: &[[f64; 3]; 3], x: Vec2) -> f64 {
        let v = [x[0], x[1], 1.0];
        (0..3).map(|r| (0..3).map(|c| v[r] * f[r][c] * v[c]).sum::<f64>()).sum()
    }

    #[test]
    fn f_matrix_examples() {
        let c = ComponentParams::isotropic(1.0, [0.0, 0.0], 1.0).unwrap();
        assert_eq!(f_matrix(&c), [[-1.0, -0.0, 0.0], [-0.0, -1.0, 0.0], [0.0, 0.0, -0.0]]);
        let (c0, _) = reference();
        assert_eq!(f_matrix(&c0), [[-1.0, -0.0, 2.5], [-0.0, -1.0, 2.0], [2.5, 2.0, -10.25]]);
    }

    #[test]
    fn f_matrix_identity_random() {
        let mut rng = SeededRng::new(5, Stream::Perturbation);
        for _ in 0..10_000 {
            let a = rng.uniform_in(0.1, 3.0);
            let d = rng.uniform_in(0.1, 3.0);
            let b = rng.uniform_in(-0.9, 0.9) * math::sqrt(a * d);
            let mu = [rng.uniform_in(-5.0, 5.0), rng.uniform_in(-5.0, 5.0)];
            let c = ComponentParams::new(1.0, mu, [[a, b], [b, d]]).unwrap();
            let x = [rng.uniform_in(-8.0, 8.0), rng.uniform_in(-8.0, 8.0)];
            let residual = quad(&f_matrix(&c), x) + mahalanobis_sq(x, &c);
            assert!(residual.abs() <= 1e-10 * (1.0 + mahalanobis_sq(x, &c)), "{residual}");
        }
    }

    #[test]
    fn hard_rule_and_ties() {
        let (c0, c1) = reference();
        assert_eq!(classify_hard(c0.mean, &c0, &c1), Label::Zero);
        assert_eq!(classify_hard([0.0, 7.0], &c0, &c1), Label::Zero);
        assert_eq!(classify_hard([-0.1, 2.0], &c0, &c1), Label::One);
    }

    #[test]
    fn hard_rule_matches_exhaustive_comparison() {
        let (c0, c1) = reference();
        let c1 = ComponentParams::new(0.5, c1.mean, [[1.5, 0.3], [0.3, 0.6]]).unwrap();
        let mut rng = SeededRng::new(6, Stream::Perturbation);
        for _ in 0..1000 {
            let x = [rng.uniform_in(-6.0, 6.0), rng.uniform_in(-2.0, 6.0)];
            let d = [c0.mahalanobis_sq(x), c1.mahalanobis_sq(x)];
            let oracle = if d[1] < d[0] { Label::One } else { Label::Zero };
            assert_eq!(classify_hard(x, &c0, &c1), oracle);
            let (g0, g1) = soft_membership(x, &c0, &c1);
            if (d[0] - d[1]).abs() > 1e-9 {
                assert_eq!(if g1 > g0 { Label::One } else { Label::Zero }, oracle);
            }
        }
    }

    #[test]
    fn softmax_examples() {
        let (c0, c1) = reference();
        assert_eq!(soft_membership([0.0, 3.0], &c0, &c1), (0.5, 0.5));
        let (g0, g1) = soft_membership(c0.mean, &c0, &c1);
        let oracle = 1.0 / (1.0 + libm::exp(-25.0));
        assert!((g0 - oracle).abs() < 1e-15 && g1 > 0.0);
        // |X| > 700 must neither overflow nor produce NaN.
        let (g0, g1) = soft_membership([60.0, 2.0], &c0, &c1);
        assert!(g0 == 1.0 && g1 < 1e-250);
        let (g0, g1) = soft_membership([-400.0, 2.0], &c0, &c1);
        assert!((g0 + g1 - 1.0).abs() <= f64::EPSILON && g1 == 1.0);
    }

    #[test]
    fn b_estimators() {
        assert_eq!(hard_b(540, 9460).unwrap(), -0.892);
        assert_eq!(hard_b(7, 0).unwrap(), 1.0);
        assert_eq!(delta_b(7.0, 0.0), 0.0);
        assert_eq!(delta_b(5000.0, 5000.0), 0.01);
        assert!((delta_b(540.0, 9460.0) - 4.52e-3).abs() < 1e-5);
        assert!(hard_b(0, 0).is_err());
        let ones = MembershipMatrix { rows: alloc::vec![[1.0, 0.0, 0.0]; 4], mode: Mode::Hard };
        assert_eq!(soft_b(&ones).unwrap(), 1.0);
        let halves = MembershipMatrix { rows: alloc::vec![[0.5, 0.5, 0.0]; 4], mode: Mode::Soft };
        assert_eq!(soft_b(&halves).unwrap(), 0.0);
        let noisy = MembershipMatrix { rows: alloc::vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], mode: Mode::Assignment };
        assert!((soft_b(&noisy).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
