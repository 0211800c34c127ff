use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

pub type Vec2 = [f64; 2];
pub type Sym2 = [[f64; 2]; 2];

/// Smallest eigenvalue a covariance may have.
pub const MIN_COV_EIGENVALUE: f64 = 1e-10;
/// Determinant below which a covariance counts as singular. The relative
/// slack keeps `1e-6·I` (det exactly at the threshold) admissible.
pub const SINGULAR_DET: f64 = 1e-12;

pub(crate) fn sym2_eigenvalues(s: &Sym2) -> [f64; 2] {
    let mean = 0.5 * (s[0][0] + s[1][1]);
    let r = math::hypot(0.5 * (s[0][0] - s[1][1]), s[0][1]);
    [mean - r, mean + r]
}

pub(crate) fn sym2_det(s: &Sym2) -> f64 {
    s[0][0] * s[1][1] - s[0][1] * s[1][0]
}

/// θ = {α, μ, Σ} for one Gaussian readout cloud, with Σ⁻¹ cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentParams {
    pub weight: f64,
    pub mean: Vec2,
    cov: Sym2,
    cov_inv: Sym2,
    log_det: f64,
}

impl ComponentParams {
    pub fn new(weight: f64, mean: Vec2, cov: Sym2) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) || !mean.iter().chain(cov.iter().flatten()).all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "component",
                reason: "weight must lie in [0, 1] and all entries must be finite".into(),
            });
        }
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * (1.0 + cov[0][1].abs()) {
            return Err(Error::InvalidParameter { name: "cov", reason: "covariance must be symmetric".into() });
        }
        let off = 0.5 * (cov[0][1] + cov[1][0]);
        let cov = [[cov[0][0], off], [off, cov[1][1]]];
        let det = sym2_det(&cov);
        if det < SINGULAR_DET * (1.0 - 1e-9) || sym2_eigenvalues(&cov)[0] <= MIN_COV_EIGENVALUE {
            return Err(Error::SingularCovariance(det));
        }
        let cov_inv = [[cov[1][1] / det, -off / det], [-off / det, cov[0][0] / det]];
        Ok(Self { weight, mean, cov, cov_inv, log_det: math::ln(det) })
    }

    pub fn isotropic(weight: f64, mean: Vec2, variance: f64) -> Result<Self> {
        Self::new(weight, mean, [[variance, 0.0], [0.0, variance]])
    }

    pub fn cov(&self) -> &Sym2 {
        &self.cov
    }

    pub fn cov_inv(&self) -> &Sym2 {
        &self.cov_inv
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// Lower Cholesky factor of Σ.
    pub fn cholesky(&self) -> Sym2 {
        let l00 = math::sqrt(self.cov[0][0]);
        let l10 = self.cov[1][0] / l00;
        let l11 = math::sqrt(self.cov[1][1] - l10 * l10);
        [[l00, 0.0], [l10, l11]]
    }

    /// (x−μ)ᵀΣ⁻¹(x−μ).
    pub fn mahalanobis_sq(&self, x: Vec2) -> f64 {
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        let s = &self.cov_inv;
        d[0] * (s[0][0] * d[0] + s[0][1] * d[1]) + d[1] * (s[1][0] * d[0] + s[1][1] * d[1])
    }

    /// Bivariate normal log-density −½d² − ½log|Σ| − log 2π.
    pub fn log_density(&self, x: Vec2) -> f64 {
        -0.5 * self.mahalanobis_sq(x) - 0.5 * self.log_det - math::ln(2.0 * PI)
    }
}

/// Uniform density over a disc; the contamination law `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDisc {
    pub center: Vec2,
    pub radius: f64,
}

impl Default for NoiseDisc {
    fn default() -> Self {
        Self { center: [0.0, 2.0], radius: 6.0 }
    }
}

impl NoiseDisc {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter { name: "noise.radius", reason: "radius must be positive and finite".into() });
        }
        Ok(Self { center, radius })
    }

    pub fn density(&self) -> f64 {
        1.0 / (PI * self.radius * self.radius)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        math::hypot(x[0] - self.center[0], x[1] - self.center[1]) <= self.radius
    }
}

/// Two Gaussian clouds plus a uniform-disc contamination component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub zero: ComponentParams,
    pub one: ComponentParams,
    pub noise_weight: f64,
    pub noise: NoiseDisc,
}

impl MixtureParams {
    pub fn new(zero: ComponentParams, one: ComponentParams, noise_weight: f64, noise: NoiseDisc) -> Result<Self> {
        let sum = zero.weight + one.weight + noise_weight;
        if !(0.0..=1.0).contains(&noise_weight) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(sum));
        }
        Ok(Self { zero, one, noise_weight, noise })
    }

    /// Noise-free mixture of two components; weights are renormalized.
    pub fn two_component(zero: ComponentParams, one: ComponentParams) -> Result<Self> {
        let total = zero.weight + one.weight;
        if !(total > 0.0) {
            return Err(Error::InvalidWeights(total));
        }
        Self::new(zero.with_weight(zero.weight / total), one.with_weight(one.weight / total), 0.0, NoiseDisc::default())
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.zero.weight, self.one.weight, self.noise_weight]
    }

    pub fn component(&self, label: usize) -> &ComponentParams {
        if label == 0 {
            &self.zero
        } else {
            &self.one
        }
    }

    /// Reference readout clouds: μ = (±2.5, 2.0), Σ = 1, equal weights.
    pub fn reference() -> Self {
        let zero = ComponentParams::isotropic(0.5, [2.5, 2.0], 1.0).expect("valid constant");
        let one = ComponentParams::isotropic(0.5, [-2.5, 2.0], 1.0).expect("valid constant");
        Self { zero, one, noise_weight: 0.0, noise: NoiseDisc::default() }
    }

    /// Full mixture density, with the correct bivariate normalization.
    pub fn density(&self, x: Vec2) -> f64 {
        let g = if self.noise.contains(x) { self.noise.density() } else { 0.0 };
        self.zero.weight * math::exp(self.zero.log_density(x))
            + self.one.weight * math::exp(self.one.log_density(x))
            + self.noise_weight * g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mahalanobis_examples() {
        let c = ComponentParams::isotropic(1.0, [1.0, -1.0], 1.0).unwrap();
        assert_eq!(c.mahalanobis_sq([1.0, -1.0]), 0.0);
        assert_eq!(c.mahalanobis_sq([4.0, 3.0]), 25.0);
        let c = ComponentParams::new(1.0, [0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((c.mahalanobis_sq([2.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cov_inverse_is_inverse() {
        let c = ComponentParams::new(0.3, [0.0, 1.0], [[1.2, -0.4], [-0.4, 0.7]]).unwrap();
        let (s, si) = (c.cov(), c.cov_inv());
        for r in 0..2 {
            for k in 0..2 {
                let v: f64 = (0..2).map(|m| s[r][m] * si[m][k]).sum();
                assert!((v - if r == k { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_singular() {
        assert!(matches!(ComponentParams::new(0.5, [0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]]), Err(Error::SingularCovariance(_))));
        assert!(ComponentParams::new(0.5, [0.0, 0.0], [[1.0, 0.2], [0.3, 1.0]]).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let m = MixtureParams::new(
            ComponentParams::isotropic(0.4, [2.5, 2.0], 1.0).unwrap(),
            ComponentParams::new(0.4, [-2.5, 2.0], [[0.8, 0.1], [0.1, 1.3]]).unwrap(),
            0.2,
            NoiseDisc::default(),
        )
        .unwrap();
        // Midpoint rule over a box holding the disc and both clouds.
        let h = 0.02;
        let mut total = 0.0;
        let mut x = -12.0 + 0.5 * h;
        while x < 12.0 {
            let mut y = -10.0 + 0.5 * h;
            while y < 14.0 {
                total += m.density([x, y]);
                y += h;
            }
            x += h;
        }
        total *= h * h;
        assert!((total - 1.0).abs() < 2e-3, "{total}");
    }
}
