use alloc::format;

use super::eigen::{eigh2, spectral_map2, Eigen2};
use super::matrix::{dot_conj, vec, ComplexMat2, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::math;

/// Tolerance used by [`DensityMatrix`] validation.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn from_name(s: &str) -> Option<Axis> {
        match s {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Pauli matrix for `axis`, with σ_y = [[0, −i], [i, 0]].
pub fn pauli(axis: Axis) -> ComplexMat2 {
    match axis {
        Axis::X => ComplexMat2::new(ZERO, ONE, ONE, ZERO),
        Axis::Y => ComplexMat2::new(ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO),
        Axis::Z => ComplexMat2::new(ONE, ZERO, ZERO, -ONE),
    }
}

/// A 2×2 Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMat2,
}

impl DensityMatrix {
    pub fn new(m: ComplexMat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm = m.hermiticity_error();
        if herm > STATE_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let lo = eigh2(&m).values[0];
        if lo < -STATE_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lo:e}")));
        }
        Ok(Self { m })
    }

    pub(crate) fn new_unchecked(m: ComplexMat2) -> Self {
        Self { m }
    }

    /// Projector onto a normalized ket.
    pub fn pure(psi: [C64; 2]) -> Result<Self> {
        let norm = math::sqrt(psi[0].norm_sqr() + psi[1].norm_sqr());
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidDensity("zero or non-finite ket".into()));
        }
        let p = [psi[0] / norm, psi[1] / norm];
        let m = ComplexMat2::from_fn(|r, c| p[r] * p[c].conj());
        Ok(Self { m: m.hermitian_part() })
    }

    pub fn maximally_mixed() -> Self {
        Self { m: ComplexMat2::identity().scale_re(0.5) }
    }

    pub fn ground() -> Self {
        Self { m: ComplexMat2::from_real([[1.0, 0.0], [0.0, 0.0]]) }
    }

    pub fn excited() -> Self {
        Self { m: ComplexMat2::from_real([[0.0, 0.0], [0.0, 1.0]]) }
    }

    pub fn matrix(&self) -> &ComplexMat2 {
        &self.m
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        eigh2(&self.m).values
    }

    pub fn expectation(&self, axis: Axis) -> f64 {
        (pauli(axis) * self.m).trace().re
    }

    /// Largest violation of the Hermitian / unit-trace / PSD constraints.
    pub fn constraint_violation(&self) -> f64 {
        let tr = self.m.trace();
        let trace_err = (tr.re - 1.0).abs().max(tr.im.abs());
        let psd_err = (-eigh2(&self.m).values[0]).max(0.0);
        self.m.hermiticity_error().max(trace_err).max(psd_err)
    }
}

/// Real 3-vector with ρ = ½(1 + r·σ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn norm(&self) -> f64 {
        math::norm3(self.0)
    }
}

pub fn bloch_from_density(rho: &DensityMatrix) -> BlochVector {
    BlochVector(Axis::ALL.map(|a| rho.expectation(a)))
}

pub fn density_from_bloch(r: &BlochVector) -> Result<DensityMatrix> {
    let norm = r.norm();
    if !norm.is_finite() || norm > 1.0 + 1e-9 {
        return Err(Error::OutsideBlochBall(norm));
    }
    // Within the rounding slack, pull back onto the sphere.
    let v = if norm > 1.0 { r.0.map(|x| x / norm) } else { r.0 };
    Ok(DensityMatrix::new_unchecked(density_matrix_from_unit_ball(v)))
}

pub(crate) fn density_matrix_from_unit_ball(v: [f64; 3]) -> ComplexMat2 {
    let [x, y, z] = v;
    ComplexMat2::new(
        C64::new(0.5 * (1.0 + z), 0.0),
        C64::new(0.5 * x, -0.5 * y),
        C64::new(0.5 * x, 0.5 * y),
        C64::new(0.5 * (1.0 - z), 0.0),
    )
}

/// Stacked `vec(σ_I)†` rows, so `(A·vec(ρ))_I = Tr(σ_I ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementMatrix {
    pub rows: [[C64; 4]; 3],
}

impl MeasurementMatrix {
    pub fn apply(&self, v: &[C64; 4]) -> [C64; 3] {
        self.rows.map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// Real part of `A·vec(ρ)`; the imaginary part vanishes for Hermitian ρ.
    pub fn apply_density(&self, rho: &DensityMatrix) -> [f64; 3] {
        self.apply(&vec(rho.matrix())).map(|z| z.re)
    }

    /// `‖A·vec(ρ) − b‖²`.
    pub fn residual_sq(&self, rho: &DensityMatrix, b: &[f64; 3]) -> f64 {
        let ab = self.apply(&vec(rho.matrix()));
        (0..3).map(|k| (ab[k] - C64::new(b[k], 0.0)).norm_sqr()).sum()
    }
}

pub fn measurement_matrix() -> MeasurementMatrix {
    MeasurementMatrix { rows: Axis::ALL.map(|a| vec(&pauli(a)).map(|z| z.conj())) }
}

/// `‖a − b‖_F`. Accepts raw matrices too, since printed (rounded) reference
/// states are not always exactly PSD.
pub fn frobenius_distance(a: &impl AsRef<ComplexMat2>, b: &impl AsRef<ComplexMat2>) -> f64 {
    (*a.as_ref() - *b.as_ref()).frobenius_norm()
}

impl AsRef<ComplexMat2> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMat2 {
        &self.m
    }
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex<const N: usize>(v: [f64; N]) -> [f64; N] {
    // Shift by the maximum first so the unit budget survives huge inputs.
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v = v.map(|x| x - top);
    let mut sorted = v;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - t > 0.0 {
            shift = t;
        }
    }
    v.map(|x| (x - shift).max(0.0))
}

/// Frobenius-nearest density matrix to the Hermitian part of `h`.
pub fn psd_unit_trace_project(h: &ComplexMat2) -> DensityMatrix {
    let e = eigh2(h);
    let projected = Eigen2 { values: project_simplex(e.values), vectors: e.vectors };
    let m = spectral_map2(&projected, |x| x);
    DensityMatrix::new_unchecked(m.hermitian_part())
}

/// `exp(−iHt)` for Hermitian `h` (ħ = 1).
pub fn unitary_from_hamiltonian(h: &ComplexMat2, t: f64) -> ComplexMat2 {
    let e = eigh2(h);
    let phases = e.values.map(|l| C64::new(math::cos(l * t), -math::sin(l * t)));
    ComplexMat2::from_fn(|r, c| {
        (0..2).map(|k| e.vectors[(r, k)] * phases[k] * e.vectors[(c, k)].conj()).sum()
    })
}

pub fn evolve_state(h: &ComplexMat2, t: f64, psi0: [C64; 2]) -> [C64; 2] {
    unitary_from_hamiltonian(h, t).mul_vec(&psi0)
}

pub fn ket_norm(psi: &[C64; 2]) -> f64 {
    math::sqrt(dot_conj(psi, psi).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rho22() -> DensityMatrix {
        DensityMatrix::new(ComplexMat2::new(
            C64::new(0.056, 0.0),
            C64::new(0.0, 0.229),
            C64::new(0.0, -0.229),
            C64::new(0.944, 0.0),
        ))
        .unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_matrices() {
        assert_eq!(pauli(Axis::X), ComplexMat2::from_real([[0.0, 1.0], [1.0, 0.0]]));
        assert_eq!(pauli(Axis::Z), ComplexMat2::from_real([[1.0, 0.0], [0.0, -1.0]]));
        assert_eq!(pauli(Axis::Y), ComplexMat2::new(ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO));
        assert_eq!(vec(&pauli(Axis::Y)), [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
        // Sign of ⟨σ_y⟩ on the fixture follows the standard convention.
        assert!((rho22().expectation(Axis::Y) + 0.458).abs() < 1e-12);
    }

    #[test]
    fn measurement_matrix_rows() {
        let a = measurement_matrix();
        assert_eq!(a.rows[2], [ONE, ZERO, ZERO, -ONE]);
        assert_eq!(a.apply_density(&DensityMatrix::maximally_mixed()), [0.0, 0.0, 0.0]);
        let b = a.apply_density(&rho22());
        let want = [0.0, -0.458, -0.888];
        for k in 0..3 {
            assert!((b[k] - want[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn bloch_maps() {
        let r = bloch_from_density(&DensityMatrix::maximally_mixed());
        assert_eq!(r.0, [0.0, 0.0, 0.0]);
        assert_eq!(bloch_from_density(&DensityMatrix::ground()).0, [0.0, 0.0, 1.0]);
        assert_eq!(density_from_bloch(&BlochVector([0.0, 0.0, 1.0])).unwrap(), DensityMatrix::ground());
        let r = bloch_from_density(&rho22());
        assert!((r.0[0]).abs() < 1e-12 && (r.0[1] + 0.458).abs() < 1e-12 && (r.0[2] + 0.888).abs() < 1e-12);
        assert!(matches!(density_from_bloch(&BlochVector([1.0, 1.0, 0.0])), Err(Error::OutsideBlochBall(_))));
    }

    #[test]
    fn rejects_invalid_density() {
        // The fixture as printed, with both off-diagonals +0.229i.
        let bad = ComplexMat2::new(c(0.056, 0.0), c(0.0, 0.229), c(0.0, 0.229), c(0.944, 0.0));
        assert!(DensityMatrix::new(bad).is_err());
        assert!(DensityMatrix::new(ComplexMat2::from_real([[2.0, 0.0], [0.0, -1.0]])).is_err());
        assert!(DensityMatrix::new(ComplexMat2::from_real([[0.5, 0.0], [0.0, 0.6]])).is_err());
    }

    #[test]
    fn frobenius_examples() {
        let g = DensityMatrix::ground();
        assert_eq!(frobenius_distance(&g, &g), 0.0);
        assert!((frobenius_distance(&g, &DensityMatrix::excited()) - core::f64::consts::SQRT_2).abs() < 1e-15);
        // The printed X_Qutip is marginally indefinite after rounding.
        let qutip = ComplexMat2::new(c(0.0571, 0.0), c(-0.0003, 0.2321), c(-0.0003, -0.2321), c(0.9429, 0.0));
        assert!(DensityMatrix::new(qutip).is_err());
        let x24 = DensityMatrix::new(ComplexMat2::new(c(0.0544, 0.0), c(-0.0002, 0.2240), c(-0.0002, -0.2240), c(0.9456, 0.0))).unwrap();
        // 2·0.0027² + 2·(0.0001² + 0.0081²)
        let oracle = libm::sqrt(2.0 * 0.0027f64.powi(2) + 2.0 * (0.0001f64.powi(2) + 0.0081f64.powi(2)));
        let d = frobenius_distance(&qutip, &x24);
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 0.01208).abs() < 5e-4);
    }

    #[test]
    fn projection_examples() {
        let p = psd_unit_trace_project(&ComplexMat2::from_real([[2.0, 0.0], [0.0, -1.0]]));
        assert!(p.matrix().max_abs_diff(&ComplexMat2::from_real([[1.0, 0.0], [0.0, 0.0]])) < 1e-15);
        let p = psd_unit_trace_project(&ComplexMat2::from_real([[0.7, 0.0], [0.0, 0.7]]));
        assert!(p.matrix().max_abs_diff(&ComplexMat2::from_real([[0.5, 0.0], [0.0, 0.5]])) < 1e-15);
        let r = rho22();
        assert!(psd_unit_trace_project(r.matrix()).matrix().max_abs_diff(r.matrix()) < 1e-14);
    }

    /// Taylor-series matrix exponential, used only as an oracle.
    fn expm_series(a: &ComplexMat2) -> ComplexMat2 {
        let mut term = ComplexMat2::identity();
        let mut sum = term;
        for k in 1..60 {
            term = (term * *a).scale_re(1.0 / k as f64);
            sum = sum + term;
        }
        sum
    }

    #[test]
    fn evolution_examples() {
        let h = pauli(Axis::X).scale_re(core::f64::consts::PI / 5.0);
        let psi0 = [ONE, ZERO];
        assert_eq!(evolve_state(&h, 0.0, psi0), psi0);
        let q = evolve_state(&h, 2.5, psi0);
        assert!(q[0].norm() < 1e-15 && (q[1] - c(0.0, -1.0)).norm() < 1e-15);
        for &t in &[0.02, 0.44, 1.3, 2.0, 7.7] {
            let psi = evolve_state(&h, t, psi0);
            let u = expm_series(&h.scale(c(0.0, -t)));
            let oracle = u.mul_vec(&psi0);
            let arg = core::f64::consts::PI * t / 5.0;
            assert!((psi[0] - oracle[0]).norm() < 1e-12 && (psi[1] - oracle[1]).norm() < 1e-12);
            assert!((psi[0] - c(libm::cos(arg), 0.0)).norm() < 1e-12);
            assert!((psi[1] - c(0.0, -libm::sin(arg))).norm() < 1e-12);
        }
    }

    fn arb_density() -> impl Strategy<Value = DensityMatrix> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..=1.0).prop_map(|(x, y, z, s)| {
            let n = libm::sqrt(x * x + y * y + z * z).max(1e-12);
            let scale = s / n;
            density_from_bloch(&BlochVector([x * scale, y * scale, z * scale])).unwrap()
        })
    }

    fn arb_herm() -> impl Strategy<Value = ComplexMat2> {
        (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
            .prop_map(|(a, d, br, bi)| ComplexMat2::new(c(a, 0.0), c(br, bi), c(br, -bi), c(d, 0.0)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bloch_round_trip(rho in arb_density()) {
            let r = bloch_from_density(&rho);
            prop_assert!(r.norm() <= 1.0 + 1e-12);
            let back = density_from_bloch(&r).unwrap();
            prop_assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-12);
            let pure = rho.matrix().det().re <= 1e-12;
            prop_assert_eq!(pure, (r.norm() - 1.0).abs() <= 1e-11);
        }

        #[test]
        fn measurement_is_real(rho in arb_density()) {
            let ab = measurement_matrix().apply(&vec(rho.matrix()));
            prop_assert!(ab.iter().all(|z| z.im.abs() <= 1e-12));
        }

        #[test]
        fn projection_idempotent_nonexpansive(h1 in arb_herm(), h2 in arb_herm()) {
            let p1 = psd_unit_trace_project(&h1);
            let p2 = psd_unit_trace_project(&h2);
            prop_assert!(p1.constraint_violation() <= 1e-12);
            let again = psd_unit_trace_project(p1.matrix());
            prop_assert!(again.matrix().max_abs_diff(p1.matrix()) < 1e-12);
            prop_assert!(frobenius_distance(&p1, &p2) <= (h1 - h2).frobenius_norm() + 1e-12);
        }

        #[test]
        fn evolution_preserves_norm(h in arb_herm(), t in -20.0f64..20.0, a in -1.0f64..1.0, b in -1.0f64..1.0, ph in 0.0f64..6.3) {
            let n = libm::sqrt(a * a + b * b).max(1e-9);
            let psi0 = [c(a / n, 0.0), c(libm::cos(ph) * b / n, libm::sin(ph) * b / n)];
            let psi = evolve_state(&h, t, psi0);
            prop_assert!((ket_norm(&psi) - ket_norm(&psi0)).abs() < 1e-12);
        }
    }
}
