//! From I-Q datasets to b-vectors: calibration, per-sample rules and the
//! capacitated assignment.

pub mod assignment;
pub mod classify;
pub mod em;
pub mod params;

pub use assignment::{assignment_solve, capacities, estimate_weights, min_cost_assignment};
pub use classify::{
    classify_hard, delta_b, f_matrix, hard_b, mahalanobis_sq, soft_b, soft_membership, BVector, MembershipMatrix, Mode,
};
pub use em::{em_fit, EmFit, EmInit, EmOptions};
pub use params::{ComponentParams, MixtureParams, NoiseDisc};

use crate::error::Result;
use crate::readout::{IQDataset, IQSample, Label};

/// Memberships for one dataset together with the b estimate they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrimination {
    pub memberships: MembershipMatrix,
    pub b: f64,
    pub delta_b: f64,
}

/// Memberships for arbitrary samples under the hard or soft rule.
pub fn memberships(samples: &[IQSample], theta: &MixtureParams, mode: Mode) -> MembershipMatrix {
    let rows = samples
        .iter()
        .map(|s| match mode {
            Mode::Soft => {
                let (g0, g1) = soft_membership(s.point(), &theta.zero, &theta.one);
                [g0, g1, 0.0]
            }
            _ => match classify_hard(s.point(), &theta.zero, &theta.one) {
                Label::Zero => [1.0, 0.0, 0.0],
                _ => [0.0, 1.0, 0.0],
            },
        })
        .collect();
    MembershipMatrix { rows, mode: if mode == Mode::Soft { Mode::Soft } else { Mode::Hard } }
}

/// b and Δb implied by a membership matrix (effective counts for Δb).
pub fn b_from_memberships(m: MembershipMatrix) -> Result<Discrimination> {
    let b = soft_b(&m)?;
    let (n0, n1) = m.effective_counts();
    Ok(Discrimination { delta_b: delta_b(n0, n1), b, memberships: m })
}

/// Runs the per-sample rule for `mode` over `d`. Assignment mode uses
/// `theta.weights()` as the class proportions.
pub fn discriminate(d: &IQDataset, theta: &MixtureParams, mode: Mode) -> Result<Discrimination> {
    let m = match mode {
        Mode::Assignment => assignment_solve(d, theta, theta.weights())?,
        _ => memberships(&d.samples, theta, mode),
    };
    b_from_memberships(m)
}

/// `(b_I, Δb_I)` for one axis.
pub fn dataset_to_b(d: &IQDataset, theta: &MixtureParams, mode: Mode) -> Result<(f64, f64)> {
    let r = discriminate(d, theta, mode)?;
    Ok((r.b, r.delta_b))
}
