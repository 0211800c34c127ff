//! One-shot regeneration of the published numerical illustration: state
//! reconstructions from the published b rows, the simulated pipelines, EM
//! estimates and the Frobenius distances, with a pass/fail line per check.

use std::path::Path;

use iqtomo_core::discriminate::{delta_b, hard_b, BVector, EmFit, EmInit, EmOptions, MixtureParams, Mode};
use iqtomo_core::qcore::{frobenius_distance, ComplexMat2, C64};
use iqtomo_core::qst::{bilevel_qst, qst_closed_form, tomography_report, two_stage_qst, Solver};
use iqtomo_core::readout::ReadoutModel;
use serde_json::json;

use crate::config::rho22;
use crate::error::Result;
use crate::formats::{b_table_to_csv, to_pretty_json, write_atomic, MatrixJson, ReportJson};

/// Published b-vector estimates.
pub const B_QUTIP: [f64; 3] = [-0.0006, -0.4674, -0.8920];
pub const B_ME: [f64; 3] = [-0.0044, -0.4659, -0.8979];
pub const B_SDP: [f64; 3] = [-0.0004, -0.4480, -0.8913];

/// Outcome counts `(n0, n1)` per axis of the illustration.
pub const COUNTS: [[u64; 2]; 3] = [[4996, 5004], [2663, 7337], [540, 9460]];

/// Printed Frobenius distances from X_Qutip to X_(12) and X_(24).
pub const PRINTED_FROBENIUS: [f64; 2] = [0.6455, 0.6406];

pub const MATRIX_TOL: f64 = 5e-4;

/// Printed 2x2 Hermitian matrix `[[d0, z], [z*, d1]]`.
fn printed(d0: f64, z: (f64, f64), d1: f64) -> ComplexMat2 {
    ComplexMat2::new(C64::new(d0, 0.0), C64::new(z.0, z.1), C64::new(z.0, -z.1), C64::new(d1, 0.0))
}

pub fn x_qutip() -> ComplexMat2 {
    printed(0.0571, (-0.0003, 0.2321), 0.9429)
}

pub fn x_24() -> ComplexMat2 {
    printed(0.0544, (-0.0002, 0.2240), 0.9456)
}

pub fn x_12() -> ComplexMat2 {
    printed(0.0597, (-0.0008, 0.2274), 0.9403)
}

/// Mean and covariance of one mixture component.
pub type Moments = ([f64; 2], [[f64; 2]; 2]);

/// Published EM estimates: per axis, per component.
pub const PUBLISHED_EM: [[Moments; 2]; 3] = [
    [
        ([2.49752013, 1.98083953], [[0.99438549, -0.02981291], [-0.02981291, 0.9870682]]),
        ([-2.50895142, 1.96288668], [[0.98564721, 0.0094373], [0.0094373, 0.97446583]]),
    ],
    [
        ([2.48478612, 1.99784236], [[1.00764116, -0.00442557], [-0.00442557, 0.9942282]]),
        ([-2.55945933, 1.96636545], [[0.93471164, 0.01047111], [0.01047111, 0.92818537]]),
    ],
    [
        ([2.49009736, 1.99746892], [[1.00821519, 0.00149597], [0.00149597, 0.98441265]]),
        ([-2.60719554, 1.92029166], [[1.01026808, -0.13815533], [-0.13815533, 0.94788982]]),
    ],
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational lines never fail the run.
    pub gating: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, gating: true, detail }
    }

    fn info(name: &str, detail: String) -> Self {
        Self { name: name.into(), passed: true, gating: false, detail }
    }

    pub fn line(&self) -> String {
        let tag = match (self.gating, self.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

pub fn max_abs_entry_diff(a: &ComplexMat2, b: &ComplexMat2) -> f64 {
    (0..4).map(|k| (a[(k / 2, k % 2)] - b[(k / 2, k % 2)]).norm()).fold(0.0, f64::max)
}

fn em_rows(axis: &str, source: &str, comps: [Moments; 2]) -> Vec<serde_json::Value> {
    comps
        .iter()
        .enumerate()
        .map(|(k, (mu, s))| json!({"axis": axis, "component": k, "source": source, "mu": mu, "sigma": s}))
        .collect()
}

fn fit_components(f: &EmFit) -> [Moments; 2] {
    [(f.params.zero.mean, *f.params.zero.cov()), (f.params.one.mean, *f.params.one.cov())]
}

/// Regenerate the bundle into `out` and return every check.
pub fn run(seed: u64, out: &Path) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    // Reconstructions from the published b rows.
    let rec_q = qst_closed_form(&BVector::exact(B_QUTIP))?;
    let rec_24 = qst_closed_form(&BVector::exact(B_SDP))?;
    let rec_12 = qst_closed_form(&BVector::exact(B_ME))?;
    let dq = max_abs_entry_diff(rec_q.rho.matrix(), &x_qutip());
    let d24 = max_abs_entry_diff(rec_24.rho.matrix(), &x_24());
    let d12 = max_abs_entry_diff(rec_12.rho.matrix(), &x_12());
    checks.push(Check::new("X_Qutip from Qutip b row", dq <= MATRIX_TOL, format!("max entry error {dq:.2e} (tol {MATRIX_TOL:.0e})")));
    checks.push(Check::new("X_(24) from SDP b row", d24 <= MATRIX_TOL, format!("max entry error {d24:.2e} (tol {MATRIX_TOL:.0e})")));
    checks.push(Check::info(
        "X_(12) from ME b row",
        format!("max entry error {d12:.2e}; printed matrix is not the ball projection of its b row, excluded"),
    ));
    write_atomic(
        &out.join("reconstructions.json"),
        &to_pretty_json(&json!({
            "X_Qutip": {"b": B_QUTIP, "recomputed": MatrixJson::from_density(&rec_q.rho), "printed": MatrixJson::from_mat2(&x_qutip()), "max_entry_error": dq},
            "X_24": {"b": B_SDP, "recomputed": MatrixJson::from_density(&rec_24.rho), "printed": MatrixJson::from_mat2(&x_24()), "max_entry_error": d24},
            "X_12": {"b": B_ME, "recomputed": MatrixJson::from_density(&rec_12.rho), "printed": MatrixJson::from_mat2(&x_12()), "max_entry_error": d12},
        })),
    )?;

    // Counts to b.
    let counts_b = COUNTS.map(|[n0, n1]| hard_b(n0, n1).expect("non-empty counts"));
    let exact = counts_b[1] == B_QUTIP[1] && counts_b[2] == B_QUTIP[2];
    checks.push(Check::new("b_y, b_z from counts", exact, format!("b_y = {}, b_z = {}", counts_b[1], counts_b[2])));
    checks.push(Check::info(
        "b_x from counts",
        format!("{} vs printed {} (erratum in the published value, |diff| = {:.1e})", counts_b[0], B_QUTIP[0], (counts_b[0] - B_QUTIP[0]).abs()),
    ));
    let db_even = delta_b(5000.0, 5000.0);
    let db_z = delta_b(540.0, 9460.0);
    checks.push(Check::new(
        "delta_b formula",
        db_even == 0.01 && (db_z - 4.52e-3).abs() <= 1e-5,
        format!("delta_b(5000,5000) = {db_even}, delta_b(540,9460) = {db_z:.6}"),
    ));

    // The simulated pipelines.
    let truth = rho22();
    let model = ReadoutModel::from_mixture(&MixtureParams::reference());
    let data = model.simulate_all(&truth, 10_000, seed)?;
    let em = EmOptions { init: EmInit::KMeansPlusPlus { seed }, ..EmOptions::default() };
    let two = two_stage_qst(data.each_ref(), 0.5, &em, Mode::Hard, Solver::ClosedForm)?;
    let thetas = [0, 1, 2].map(|k| data[k].mixture.expect("simulated data carry their mixture"));
    let soft = bilevel_qst(data.each_ref(), &thetas, Mode::Soft)?;
    let rep_two = tomography_report(&two.qst, Some(Mode::Hard), Some(&truth));
    let rep_soft = tomography_report(&soft.qst, Some(Mode::Soft), Some(&truth));
    for (name, rep) in [("two-stage EM + hard", &rep_two), ("bilevel soft, true θ", &rep_soft)] {
        let f = rep.frobenius_to_ref.expect("reference given");
        checks.push(Check::new(name, f <= 0.03, format!("Frobenius to rho22 = {f:.4} (tol 0.03, seed {seed})")));
    }
    write_atomic(&out.join("pipeline_two_stage.json"), &to_pretty_json(&ReportJson::from(&rep_two)))?;
    write_atomic(&out.join("pipeline_bilevel_soft.json"), &to_pretty_json(&ReportJson::from(&rep_soft)))?;
    let rows = vec![
        ("qutip (published)".to_string(), B_QUTIP),
        ("me (published)".to_string(), B_ME),
        ("sdp (published)".to_string(), B_SDP),
        ("counts".to_string(), counts_b),
        ("em_hard (simulated)".to_string(), rep_two.b),
        ("bilevel_soft (simulated)".to_string(), rep_soft.b),
    ];
    write_atomic(&out.join("table3.csv"), &b_table_to_csv(&rows))?;

    // EM estimates, published values next to this run.
    let mut em_table = Vec::new();
    for (k, axis) in ["x", "y", "z"].iter().enumerate() {
        em_table.extend(em_rows(axis, "published", PUBLISHED_EM[k]));
        em_table.extend(em_rows(axis, "fit", fit_components(&two.fits[k])));
    }
    write_atomic(&out.join("em_tables.json"), &to_pretty_json(&em_table))?;

    // Frobenius distances recomputed from the printed matrices.
    let f12 = frobenius_distance(&x_qutip(), &x_12());
    let f24 = frobenius_distance(&x_qutip(), &x_24());
    checks.push(Check::new("||X_Qutip - X_(24)||_F recomputed", (f24 - 0.01208).abs() <= 5e-5, format!("{f24:.5}")));
    checks.push(Check::info(
        "printed Frobenius values",
        format!(
            "erratum: printed {} / {} vs recomputed {f12:.4} / {f24:.4}",
            PRINTED_FROBENIUS[0], PRINTED_FROBENIUS[1]
        ),
    ));
    write_atomic(
        &out.join("frobenius.json"),
        &to_pretty_json(&json!({
            "qutip_vs_12": {"printed": PRINTED_FROBENIUS[0], "recomputed": f12, "erratum": true},
            "qutip_vs_24": {"printed": PRINTED_FROBENIUS[1], "recomputed": f24, "erratum": true},
        })),
    )?;

    let mut text: String = checks.iter().map(|c| c.line() + "\n").collect();
    text.push_str(if checks.iter().all(|c| c.passed) { "all checks passed\n" } else { "some checks failed\n" });
    write_atomic(&out.join("checks.txt"), text.as_bytes())?;
    Ok(checks)
}
