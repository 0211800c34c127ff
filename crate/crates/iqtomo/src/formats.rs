//! On-disk formats: JSON for matrices, mixtures and reports, JSON-lines for
//! datasets and trajectories, CSV for tables. Every writer goes through
//! [`write_atomic`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use iqtomo_core::discriminate::{BVector, ComponentParams, MembershipMatrix, MixtureParams, Mode, NoiseDisc};
use iqtomo_core::qcore::{measurement_matrix, Axis, ComplexMat2, ComplexMat4, DensityMatrix, C64};
use iqtomo_core::qhi::Trajectory;
use iqtomo_core::qst::{Solver, TomographyReport};
use iqtomo_core::readout::{IQDataset, IQSample, Label};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Write `bytes` to a temp file next to `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: e.to_string() }
}

/// Complex matrix as `{"re": [[..]], "im": [[..]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn from_entries(n: usize, at: impl Fn(usize, usize) -> C64) -> Self {
        let part = |f: &dyn Fn(C64) -> f64| (0..n).map(|r| (0..n).map(|c| f(at(r, c))).collect()).collect();
        Self { re: part(&|z| z.re), im: part(&|z| z.im) }
    }

    fn entries(&self, n: usize) -> Result<Vec<Vec<C64>>> {
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|row| row.len() == n);
        if !square(&self.re) || !square(&self.im) {
            return Err(Error::Invalid(format!("expected {n}x{n} re/im arrays")));
        }
        Ok((0..n).map(|r| (0..n).map(|c| C64::new(self.re[r][c], self.im[r][c])).collect()).collect())
    }

    pub fn from_mat2(m: &ComplexMat2) -> Self {
        Self::from_entries(2, |r, c| m[(r, c)])
    }

    pub fn from_mat4(m: &ComplexMat4) -> Self {
        Self::from_entries(4, |r, c| m[(r, c)])
    }

    pub fn to_mat2(&self) -> Result<ComplexMat2> {
        let e = self.entries(2)?;
        Ok(ComplexMat2::from_fn(|r, c| e[r][c]))
    }

    pub fn to_mat4(&self) -> Result<ComplexMat4> {
        let e = self.entries(4)?;
        Ok(ComplexMat4::from_fn(|r, c| e[r][c]))
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::from_mat2(rho.matrix())
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        Ok(DensityMatrix::new(self.to_mat2()?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseJson {
    pub center: [f64; 2],
    pub radius: f64,
}

/// `{"alpha":[a0,a1,a2],"mu":[[..],[..]],"sigma":[[[..]],[[..]]],"noise":{..}}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureJson {
    pub alpha: [f64; 3],
    pub mu: [[f64; 2]; 2],
    pub sigma: [[[f64; 2]; 2]; 2],
    pub noise: NoiseJson,
}

impl From<&MixtureParams> for MixtureJson {
    fn from(m: &MixtureParams) -> Self {
        Self {
            alpha: m.weights(),
            mu: [m.zero.mean, m.one.mean],
            sigma: [*m.zero.cov(), *m.one.cov()],
            noise: NoiseJson { center: m.noise.center, radius: m.noise.radius },
        }
    }
}

impl MixtureJson {
    pub fn to_params(&self) -> Result<MixtureParams> {
        let zero = ComponentParams::new(self.alpha[0], self.mu[0], self.sigma[0])?;
        let one = ComponentParams::new(self.alpha[1], self.mu[1], self.sigma[1])?;
        let noise = NoiseDisc::new(self.noise.center, self.noise.radius)?;
        Ok(MixtureParams::new(zero, one, self.alpha[2], noise)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AxisJson {
    X,
    Y,
    Z,
}

impl From<Axis> for AxisJson {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => AxisJson::X,
            Axis::Y => AxisJson::Y,
            Axis::Z => AxisJson::Z,
        }
    }
}

impl From<AxisJson> for Axis {
    fn from(a: AxisJson) -> Self {
        match a {
            AxisJson::X => Axis::X,
            AxisJson::Y => Axis::Y,
            AxisJson::Z => Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LabelJson {
    Zero,
    One,
    Noise,
}

impl From<Label> for LabelJson {
    fn from(l: Label) -> Self {
        match l {
            Label::Zero => LabelJson::Zero,
            Label::One => LabelJson::One,
            Label::Noise => LabelJson::Noise,
        }
    }
}

impl From<LabelJson> for Label {
    fn from(l: LabelJson) -> Self {
        match l {
            LabelJson::Zero => Label::Zero,
            LabelJson::One => Label::One,
            LabelJson::Noise => Label::Noise,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetHeader {
    obs: AxisJson,
    seed: u64,
    #[serde(default)]
    mixture: Option<MixtureJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleLine {
    i: f64,
    q: f64,
    #[serde(default)]
    truth: Option<LabelJson>,
}

pub fn dataset_to_jsonl(d: &IQDataset) -> String {
    let header = DatasetHeader { obs: d.observable.into(), seed: d.seed, mixture: d.mixture.as_ref().map(MixtureJson::from) };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for s in &d.samples {
        let line = SampleLine { i: s.i, q: s.q, truth: s.truth.map(Into::into) };
        out.push_str(&serde_json::to_string(&line).expect("sample serializes"));
        out.push('\n');
    }
    out
}

/// Parse a JSON-lines dataset; `path` is only used in error messages.
pub fn dataset_from_jsonl(text: &str, path: &Path) -> Result<IQDataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| parse_error(path, 1, "empty file, expected a header line"))?;
    let header: DatasetHeader = serde_json::from_str(first).map_err(|e| parse_error(path, 1, e))?;
    let mixture = header.mixture.map(|m| m.to_params()).transpose().map_err(|e| parse_error(path, 1, e))?;
    let samples = lines
        .map(|(k, l)| {
            let s: SampleLine = serde_json::from_str(l).map_err(|e| parse_error(path, k + 1, e))?;
            Ok(IQSample::new(s.i, s.q, s.truth.map(Into::into)))
        })
        .collect::<Result<Vec<_>>>()?;
    IQDataset::new(header.obs.into(), samples, header.seed, mixture).map_err(|e| parse_error(path, 1, e))
}

pub fn save_dataset(d: &IQDataset, path: &Path) -> Result<()> {
    write_atomic(path, dataset_to_jsonl(d).as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<IQDataset> {
    dataset_from_jsonl(&read_text(path)?, path)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Columns `obs,i,q,truth`; unlabeled samples leave `truth` empty.
pub fn dataset_to_csv(d: &IQDataset) -> Vec<u8> {
    let obs = d.observable.name();
    csv_bytes(
        &["obs", "i", "q", "truth"],
        d.samples.iter().map(|s| vec![obs.to_string(), s.i.to_string(), s.q.to_string(), s.truth.map_or("", |l| l.name()).to_string()]),
    )
}

/// Columns `sample_index,gamma0,gamma1,gamma_noise`.
pub fn memberships_to_csv(m: &MembershipMatrix) -> Vec<u8> {
    csv_bytes(
        &["sample_index", "gamma0", "gamma1", "gamma_noise"],
        m.rows.iter().enumerate().map(|(k, r)| vec![k.to_string(), r[0].to_string(), r[1].to_string(), r[2].to_string()]),
    )
}

/// Table with one row per method and columns `method,b_x,b_y,b_z`.
pub fn b_table_to_csv(rows: &[(String, [f64; 3])]) -> Vec<u8> {
    csv_bytes(
        &["method", "b_x", "b_y", "b_z"],
        rows.iter().map(|(name, b)| {
            let mut row = vec![name.clone()];
            row.extend(b.iter().map(f64::to_string));
            row
        }),
    )
}

pub fn loss_curve_to_csv(curve: &[f64]) -> Vec<u8> {
    csv_bytes(&["iteration", "loss"], curve.iter().enumerate().map(|(k, l)| vec![k.to_string(), l.to_string()]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub b: [f64; 3],
    pub delta_b: [f64; 3],
    pub rho: MatrixJson,
    pub residual_sq: f64,
    pub frobenius_to_ref: Option<f64>,
    pub solver: String,
    pub mode: Option<String>,
}

impl From<&TomographyReport> for ReportJson {
    fn from(r: &TomographyReport) -> Self {
        Self {
            b: r.b,
            delta_b: r.delta_b,
            rho: MatrixJson::from_density(&r.rho),
            residual_sq: r.residual_sq,
            frobenius_to_ref: r.frobenius_to_ref,
            solver: r.solver.name().to_string(),
            mode: r.mode.map(|m| m.name().to_string()),
        }
    }
}

impl ReportJson {
    pub fn to_report(&self) -> Result<TomographyReport> {
        let solver = Solver::from_name(&self.solver).ok_or_else(|| Error::Invalid(format!("unknown solver {:?}", self.solver)))?;
        let mode = match &self.mode {
            Some(m) => Some(Mode::from_name(m).ok_or_else(|| Error::Invalid(format!("unknown mode {m:?}")))?),
            None => None,
        };
        Ok(TomographyReport {
            b: self.b,
            delta_b: self.delta_b,
            rho: self.rho.to_density()?,
            residual_sq: self.residual_sq,
            frobenius_to_ref: self.frobenius_to_ref,
            solver,
            mode,
        })
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryHeader {
    id: usize,
    dt: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepLine {
    step: usize,
    b: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<MatrixJson>,
}

/// Header `{"id":j,"dt":..}`, then one `{"step":i,"b":[..],"rho":..}` per
/// step. Missing observations are filled with the exact Bloch vector.
pub fn trajectory_to_jsonl(t: &Trajectory) -> String {
    let a = measurement_matrix();
    let mut out = serde_json::to_string(&TrajectoryHeader { id: t.id, dt: t.dt }).expect("header serializes");
    out.push('\n');
    for step in 0..=t.steps() {
        let state = t.states.get(step);
        let b = match t.observations.get(step) {
            Some(b) => b.b,
            None => a.apply_density(state.expect("state or observation present")),
        };
        let line = StepLine { step, b, rho: state.map(MatrixJson::from_density) };
        let _ = writeln!(out, "{}", serde_json::to_string(&line).expect("step serializes"));
    }
    out
}

pub fn trajectory_from_jsonl(text: &str, path: &Path) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| parse_error(path, 1, "empty file, expected a header line"))?;
    let header: TrajectoryHeader = serde_json::from_str(first).map_err(|e| parse_error(path, 1, e))?;
    let mut states = Vec::new();
    let mut observations = Vec::new();
    let mut all_states = true;
    for (k, l) in lines {
        let s: StepLine = serde_json::from_str(l).map_err(|e| parse_error(path, k + 1, e))?;
        if s.step != observations.len() {
            return Err(parse_error(path, k + 1, format!("expected step {}, found {}", observations.len(), s.step)));
        }
        observations.push(BVector::exact(s.b));
        match s.rho {
            Some(m) => states.push(m.to_density().map_err(|e| parse_error(path, k + 1, e))?),
            None => all_states = false,
        }
    }
    if !all_states {
        states.clear();
    }
    Ok(Trajectory { id: header.id, dt: header.dt, states, observations })
}
