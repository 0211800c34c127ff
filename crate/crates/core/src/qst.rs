//! Constrained least-squares state reconstruction and the collapsed bilevel
//! pipeline that feeds it straight from I-Q data.
//!
//! For a qubit measured in the Pauli basis, `A·vec(ρ)` is the Bloch vector,
//! so the PSD + unit-trace feasible set is the unit ball and the optimum is
//! the Euclidean projection of `b` onto it. The projected-gradient solver
//! works on the matrix directly (spectral projection onto density matrices)
//! and serves as an independent cross-check.

use alloc::vec::Vec;

use crate::discriminate::{
    b_from_memberships, classify::Mode, discriminate, em_fit, memberships, BVector, Discrimination, EmFit, EmOptions,
    MembershipMatrix, MixtureParams,
};
use crate::error::{Error, Result};
use crate::math;
use crate::qcore::state::density_matrix_from_unit_ball;
use crate::qcore::{frobenius_distance, measurement_matrix, pauli, psd_unit_trace_project, Axis, ComplexMat2, DensityMatrix};
use crate::readout::IQDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    ClosedForm,
    ProjectedGradient,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::ClosedForm => "closed_form",
            Solver::ProjectedGradient => "projected_gradient",
        }
    }

    pub fn from_name(s: &str) -> Option<Solver> {
        match s {
            "closed_form" => Some(Solver::ClosedForm),
            "projected_gradient" => Some(Solver::ProjectedGradient),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QstResult {
    pub rho: DensityMatrix,
    pub b_used: BVector,
    /// `‖A·vec(ρ) − b‖²`.
    pub residual_sq: f64,
    pub solver: Solver,
    pub iterations: usize,
    pub converged: bool,
}

fn check_b(b: &BVector) -> Result<()> {
    if b.b.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "b", reason: "b-vector must be finite".into() })
    }
}

/// Exact optimum: project `b` onto the unit Bloch ball.
pub fn qst_closed_form(b: &BVector) -> Result<QstResult> {
    check_b(b)?;
    let norm = math::norm3(b.b);
    let r = if norm > 1.0 { b.b.map(|x| x / norm) } else { b.b };
    let rho = DensityMatrix::new_unchecked(density_matrix_from_unit_ball(r));
    Ok(QstResult {
        residual_sq: measurement_matrix().residual_sq(&rho, &b.b),
        rho,
        b_used: *b,
        solver: Solver::ClosedForm,
        iterations: 0,
        converged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgOptions {
    /// Step in Bloch units; 0.5 is the inverse Lipschitz constant there.
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PgOptions {
    fn default() -> Self {
        Self { step: 0.5, tol: 1e-10, max_iter: 10_000 }
    }
}

/// Projected gradient on `‖A·vec(ρ) − b‖²` over density matrices.
pub fn qst_projected_gradient(b: &BVector, opts: &PgOptions) -> Result<QstResult> {
    check_b(b)?;
    if !(opts.step > 0.0 && opts.step <= 1.0) {
        return Err(Error::InvalidParameter { name: "step", reason: "must lie in (0, 1]".into() });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter { name: "tol", reason: "must be positive".into() });
    }
    let a = measurement_matrix();
    let sigmas = Axis::ALL.map(pauli);
    let mut rho = DensityMatrix::maximally_mixed();
    let mut best = (a.residual_sq(&rho, &b.b), rho);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let ab = a.apply_density(&rho);
        // Gradient in Bloch coordinates is 2(r − b); dρ = ½dr·σ.
        let mut shift = ComplexMat2::zeros();
        for k in 0..3 {
            shift = shift + sigmas[k].scale_re(opts.step * (ab[k] - b.b[k]));
        }
        let next = psd_unit_trace_project(&(*rho.matrix() - shift));
        let moved = frobenius_distance(&next, &rho);
        rho = next;
        let obj = a.residual_sq(&rho, &b.b);
        if obj < best.0 {
            best = (obj, rho);
        }
        if moved < opts.tol {
            converged = true;
            break;
        }
    }
    let rho = if converged { rho } else { best.1 };
    Ok(QstResult {
        residual_sq: a.residual_sq(&rho, &b.b),
        rho,
        b_used: *b,
        solver: Solver::ProjectedGradient,
        iterations,
        converged,
    })
}

pub fn reconstruct(b: &BVector, solver: Solver) -> Result<QstResult> {
    match solver {
        Solver::ClosedForm => qst_closed_form(b),
        Solver::ProjectedGradient => qst_projected_gradient(b, &PgOptions::default()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilevelResult {
    pub qst: QstResult,
    pub memberships: [MembershipMatrix; 3],
    pub mode: Mode,
}

fn check_axes(datasets: [&IQDataset; 3]) -> Result<()> {
    for (d, axis) in datasets.iter().zip(Axis::ALL) {
        if d.observable != axis {
            return Err(Error::InvalidParameter { name: "datasets", reason: "datasets must be ordered x, y, z".into() });
        }
    }
    Ok(())
}

fn assemble_b(parts: &[Discrimination; 3]) -> BVector {
    BVector { b: core::array::from_fn(|k| parts[k].b), delta: core::array::from_fn(|k| parts[k].delta_b) }
}

/// Lower level collapsed to its per-sample rule, upper level solved exactly.
pub fn bilevel_qst(datasets: [&IQDataset; 3], thetas: &[MixtureParams; 3], mode: Mode) -> Result<BilevelResult> {
    bilevel_qst_with(datasets, thetas, mode, Solver::ClosedForm)
}

pub fn bilevel_qst_with(
    datasets: [&IQDataset; 3],
    thetas: &[MixtureParams; 3],
    mode: Mode,
    solver: Solver,
) -> Result<BilevelResult> {
    check_axes(datasets)?;
    let [x, y, z] = [0, 1, 2].map(|k| discriminate(datasets[k], &thetas[k], mode));
    let parts = [x?, y?, z?];
    let qst = reconstruct(&assemble_b(&parts), solver)?;
    let [mx, my, mz] = parts.map(|p| p.memberships);
    Ok(BilevelResult { qst, memberships: [mx, my, mz], mode })
}

/// Conventional two-stage pipeline: EM on a calibration prefix of each
/// dataset, classification of the remaining shots with the fitted θ
/// (hard in the classic setup), then QST.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageResult {
    pub qst: QstResult,
    pub fits: Vec<EmFit>,
    /// Number of shots per axis used for calibration.
    pub calibration_len: [usize; 3],
}

pub fn two_stage_qst(
    datasets: [&IQDataset; 3],
    calibration_fraction: f64,
    em: &EmOptions,
    mode: Mode,
    solver: Solver,
) -> Result<TwoStageResult> {
    check_axes(datasets)?;
    if !(calibration_fraction > 0.0 && calibration_fraction < 1.0) {
        return Err(Error::InvalidParameter { name: "calibration_fraction", reason: "must lie in (0, 1)".into() });
    }
    let mut fits = Vec::with_capacity(3);
    let mut parts = Vec::with_capacity(3);
    let mut calibration_len = [0; 3];
    for (k, d) in datasets.iter().enumerate() {
        let split = math::floor(calibration_fraction * d.len() as f64) as usize;
        let (calib, rest) = d.split_at(split);
        if rest.is_empty() {
            return Err(Error::Empty("no shots left after the calibration split"));
        }
        let pts: Vec<_> = calib.iter().map(|s| s.point()).collect();
        let fit = em_fit(&pts, em)?;
        let part = match mode {
            Mode::Assignment => {
                let held_out = IQDataset::new(d.observable, rest, d.seed, None)?;
                discriminate(&held_out, &fit.params, mode)?
            }
            _ => b_from_memberships(memberships(&rest, &fit.params, mode))?,
        };
        parts.push(part);
        fits.push(fit);
        calibration_len[k] = split;
    }
    let parts: [Discrimination; 3] = parts.try_into().map_err(|_| Error::Empty("missing axis"))?;
    let qst = reconstruct(&assemble_b(&parts), solver)?;
    Ok(TwoStageResult { qst, fits, calibration_len })
}

/// Everything a tomography run reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyReport {
    pub b: [f64; 3],
    pub delta_b: [f64; 3],
    pub rho: DensityMatrix,
    pub residual_sq: f64,
    pub frobenius_to_ref: Option<f64>,
    pub solver: Solver,
    pub mode: Option<Mode>,
}

pub fn tomography_report(result: &QstResult, mode: Option<Mode>, reference: Option<&DensityMatrix>) -> TomographyReport {
    TomographyReport {
        b: result.b_used.b,
        delta_b: result.b_used.delta,
        rho: result.rho,
        residual_sq: result.residual_sq,
        frobenius_to_ref: reference.map(|r| frobenius_distance(&result.rho, r)),
        solver: result.solver,
        mode,
    }
}
