//! JSON run configuration. Every field has a default so a config file only
//! needs the keys it changes; unknown keys are rejected.

use std::path::{Path, PathBuf};

use iqtomo_core::discriminate::{MixtureParams, Mode};
use iqtomo_core::qcore::{density_from_bloch, BlochVector, DensityMatrix};
use iqtomo_core::qst::Solver;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_text, MatrixJson, MixtureJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Hard,
    Soft,
    Assignment,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hard => Mode::Hard,
            ModeArg::Soft => Mode::Soft,
            ModeArg::Assignment => Mode::Assignment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Closed,
    Pg,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Closed => Solver::ClosedForm,
            SolverArg::Pg => Solver::ProjectedGradient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSourceArg {
    FromStates,
    FromQst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Directory holding `x.jsonl`, `y.jsonl`, `z.jsonl`.
    pub data: PathBuf,
    pub out: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { data: PathBuf::from("data"), out: PathBuf::from("out") }
    }
}

/// Channel identification settings: `H = strength·σ_axis`, one trajectory
/// per initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QhiConfig {
    pub axis: String,
    pub strength: f64,
    pub dt: f64,
    pub steps: usize,
    pub initial_states: Vec<MatrixJson>,
    pub source: FitSourceArg,
    /// Shots per axis per step when `source` is `from_qst`.
    pub shots: usize,
}

impl Default for QhiConfig {
    fn default() -> Self {
        Self {
            axis: "x".into(),
            strength: std::f64::consts::PI / 5.0,
            dt: 0.02,
            steps: 100,
            initial_states: vec![MatrixJson::from_density(&DensityMatrix::ground())],
            source: FitSourceArg::FromStates,
            shots: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub n_per_axis: usize,
    /// State the simulator prepares.
    pub state: MatrixJson,
    /// Reports quote the Frobenius distance to this state when it is set.
    pub reference: Option<MatrixJson>,
    pub mixture: MixtureJson,
    pub mode: ModeArg,
    pub solver: SolverArg,
    /// Share of each dataset used for EM calibration in `tomo`.
    pub calibration_fraction: f64,
    pub paths: Paths,
    pub qhi: QhiConfig,
}

/// Reference state of the published numerical illustration.
pub fn rho22() -> DensityMatrix {
    density_from_bloch(&BlochVector([0.0, -0.458, -0.888])).expect("inside the Bloch ball")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            n_per_axis: 10_000,
            state: MatrixJson::from_density(&rho22()),
            reference: None,
            mixture: MixtureJson::from(&MixtureParams::reference()),
            mode: ModeArg::Hard,
            solver: SolverArg::Closed,
            calibration_fraction: 0.5,
            paths: Paths::default(),
            qhi: QhiConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?, path)
    }

    /// Checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.n_per_axis == 0 {
            return Err(Error::Invalid("n_per_axis must be at least 1".into()));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return Err(Error::Invalid("calibration_fraction must lie in (0, 1)".into()));
        }
        self.state.to_density()?;
        if let Some(r) = &self.reference {
            r.to_density()?;
        }
        self.mixture.to_params()?;
        let q = &self.qhi;
        if !["x", "y", "z"].contains(&q.axis.as_str()) {
            return Err(Error::Invalid(format!("qhi.axis must be x, y or z, found {:?}", q.axis)));
        }
        if q.steps == 0 || q.initial_states.is_empty() || q.shots == 0 {
            return Err(Error::Invalid("qhi needs steps, shots and at least one initial state".into()));
        }
        if !(q.dt.is_finite() && q.strength.is_finite()) {
            return Err(Error::Invalid("qhi.dt and qhi.strength must be finite".into()));
        }
        for s in &q.initial_states {
            s.to_density()?;
        }
        Ok(())
    }

    pub fn state(&self) -> DensityMatrix {
        self.state.to_density().expect("validated")
    }

    pub fn reference(&self) -> Option<DensityMatrix> {
        self.reference.as_ref().map(|r| r.to_density().expect("validated"))
    }

    pub fn mixture(&self) -> MixtureParams {
        self.mixture.to_params().expect("validated")
    }
}
