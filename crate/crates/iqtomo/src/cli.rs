//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use iqtomo_core::discriminate::{
    discriminate, estimate_weights, hard_b, EmInit, EmOptions, MixtureParams, Mode,
};
use iqtomo_core::qcore::{pauli, unitary_from_hamiltonian, Axis};
use iqtomo_core::qhi::{
    fit_channel, observe_trajectory, simulate_trajectory, unitary_superoperator, FitOptions, FitSource, Observation,
};
use iqtomo_core::qst::{bilevel_qst_with, tomography_report, two_stage_qst};
use iqtomo_core::readout::{IQDataset, ReadoutModel};
use serde_json::json;

use crate::config::{FitSourceArg, ModeArg, RunConfig, SolverArg};
use crate::error::{exit, Error, Result};
use crate::formats::{
    b_table_to_csv, dataset_to_csv, load_dataset, loss_curve_to_csv, memberships_to_csv, save_dataset, to_pretty_json,
    trajectory_to_jsonl, write_atomic, MatrixJson, ReportJson,
};
use crate::{repro, svg};

#[derive(Debug, Parser)]
#[command(name = "iqtomo", version, about = "Qubit state tomography and channel identification from I-Q readout data")]
pub struct Cli {
    /// JSON run configuration; defaults apply to every missing key.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, global = true, value_enum)]
    pub solver: Option<SolverArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the three Pauli-axis datasets of the configured state.
    Simulate {
        /// Shots per axis (overrides n_per_axis).
        #[arg(long)]
        n: Option<usize>,
        /// Also write CSV exports next to the JSON-lines files.
        #[arg(long)]
        csv: bool,
    },
    /// Per-sample memberships and b estimates for individual datasets.
    Discriminate {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
    },
    /// Two-stage tomography: EM calibration on a prefix, then classification.
    Tomo {
        /// Directory holding x.jsonl, y.jsonl, z.jsonl.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
    },
    /// Collapsed bilevel tomography with the configured mixture.
    Bilevel {
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
    },
    /// Simulate trajectories and fit the channel that generated them.
    Qhi,
    /// Regenerate the published numerical illustration and check it.
    ReproPaper,
    /// Scatter plot of a dataset as SVG.
    PlotIq {
        dataset: PathBuf,
        /// Output file; defaults to <out>/iq_<obs>.svg.
        svg: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INVALID_INPUT } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == exit::INVALID_INPUT {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(s) = cli.solver {
        cfg.solver = s;
    }
    if let Some(o) = cli.out {
        cfg.paths.out = o;
    }
    match cli.command {
        Command::Simulate { n, csv } => {
            if let Some(n) = n {
                cfg.n_per_axis = n;
            }
            cfg.validate()?;
            simulate(&cfg, csv)
        }
        Command::Discriminate { datasets } => discriminate_files(&cfg, &datasets),
        Command::Tomo { data } => tomo(&cfg, data.as_deref().unwrap_or(&cfg.paths.data)),
        Command::Bilevel { data } => bilevel(&cfg, data.as_deref().unwrap_or(&cfg.paths.data)),
        Command::Qhi => qhi(&cfg),
        Command::ReproPaper => repro_paper(&cfg),
        Command::PlotIq { dataset, svg } => plot_iq(&cfg, &dataset, svg.as_deref()),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    let out = cfg.paths.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    Ok(out)
}

fn load_axes(dir: &Path) -> Result<[IQDataset; 3]> {
    let [x, y, z] = Axis::ALL.map(|a| load_dataset(&dir.join(format!("{}.jsonl", a.name()))));
    let data = [x?, y?, z?];
    for (d, a) in data.iter().zip(Axis::ALL) {
        if d.observable != a {
            return Err(Error::Invalid(format!("{}.jsonl holds observable {}", a.name(), d.observable.name())));
        }
    }
    Ok(data)
}

/// θ used for a dataset. Assignment mode needs class proportions, so the
/// signal split is re-estimated with the configured noise weight held fixed.
fn theta_for(d: &IQDataset, base: &MixtureParams, mode: Mode) -> Result<MixtureParams> {
    if mode != Mode::Assignment {
        return Ok(*base);
    }
    let w = estimate_weights(d, base, 500);
    Ok(MixtureParams::new(base.zero.with_weight(w[0]), base.one.with_weight(w[1]), w[2], base.noise)?)
}

fn simulate(cfg: &RunConfig, csv: bool) -> Result<()> {
    let out = out_dir(cfg)?;
    let model = ReadoutModel::from_mixture(&cfg.mixture());
    let data = model.simulate_all(&cfg.state(), cfg.n_per_axis, cfg.seed)?;
    println!("axis  zero   one    noise");
    for d in &data {
        let name = d.observable.name();
        save_dataset(d, &out.join(format!("{name}.jsonl")))?;
        if csv {
            write_atomic(&out.join(format!("{name}.csv")), &dataset_to_csv(d))?;
        }
        let [n0, n1, nn] = d.truth_counts();
        println!("{name:<5} {n0:<6} {n1:<6} {nn}");
    }
    Ok(())
}

fn discriminate_files(cfg: &RunConfig, paths: &[PathBuf]) -> Result<()> {
    let mode: Mode = cfg.mode.into();
    let data = paths.iter().map(|p| load_dataset(p)).collect::<Result<Vec<_>>>()?;
    let out = out_dir(cfg)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["file", "obs", "b", "delta_b"]).expect("in-memory write");
    for (d, p) in data.iter().zip(paths) {
        let theta = theta_for(d, &cfg.mixture(), mode)?;
        let r = discriminate(d, &theta, mode)?;
        let stem = p.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
        write_atomic(&out.join(format!("memberships_{stem}.csv")), &memberships_to_csv(&r.memberships))?;
        wtr.write_record([p.display().to_string(), d.observable.name().into(), r.b.to_string(), r.delta_b.to_string()])
            .expect("in-memory write");
        println!("{} ({}): b = {:.4} ± {:.4}", p.display(), d.observable.name(), r.b, r.delta_b);
    }
    write_atomic(&out.join("b.csv"), &wtr.into_inner().expect("in-memory flush"))
}

fn print_report(label: &str, r: &ReportJson) {
    println!("{label}: b = [{:.4}, {:.4}, {:.4}]", r.b[0], r.b[1], r.b[2]);
    for k in 0..2 {
        println!("  [{:+.4}{:+.4}i  {:+.4}{:+.4}i]", r.rho.re[k][0], r.rho.im[k][0], r.rho.re[k][1], r.rho.im[k][1]);
    }
    if let Some(f) = r.frobenius_to_ref {
        println!("  Frobenius to reference: {f:.4}");
    }
}

fn tomo(cfg: &RunConfig, data_dir: &Path) -> Result<()> {
    let data = load_axes(data_dir)?;
    let out = out_dir(cfg)?;
    let mode: Mode = cfg.mode.into();
    let em = EmOptions { init: EmInit::KMeansPlusPlus { seed: cfg.seed }, ..EmOptions::default() };
    let result = two_stage_qst(data.each_ref(), cfg.calibration_fraction, &em, mode, cfg.solver.into())?;
    let report = ReportJson::from(&tomography_report(&result.qst, Some(mode), cfg.reference().as_ref()));
    let mut rows = Vec::new();
    if data.iter().all(|d| d.samples.iter().all(|s| s.truth.is_some())) {
        let b = data.each_ref().map(|d| {
            let [n0, n1, _] = d.truth_counts();
            hard_b(n0 as u64, n1 as u64)
        });
        let [bx, by, bz] = b;
        rows.push(("counts".to_string(), [bx?, by?, bz?]));
    }
    rows.push((format!("em_{}", mode.name()), report.b));
    write_atomic(&out.join("tomo_report.json"), &to_pretty_json(&report))?;
    write_atomic(&out.join("tomo_table.csv"), &b_table_to_csv(&rows))?;
    print_report(&format!("two-stage EM + {}", mode.name()), &report);
    Ok(())
}

fn bilevel(cfg: &RunConfig, data_dir: &Path) -> Result<()> {
    let data = load_axes(data_dir)?;
    let out = out_dir(cfg)?;
    let mode: Mode = cfg.mode.into();
    let base = cfg.mixture();
    let [tx, ty, tz] = data.each_ref().map(|d| theta_for(d, &base, mode));
    let result = bilevel_qst_with(data.each_ref(), &[tx?, ty?, tz?], mode, cfg.solver.into())?;
    let report = ReportJson::from(&tomography_report(&result.qst, Some(mode), cfg.reference().as_ref()));
    write_atomic(&out.join("bilevel_report.json"), &to_pretty_json(&report))?;
    for (m, a) in result.memberships.iter().zip(Axis::ALL) {
        write_atomic(&out.join(format!("memberships_{}.csv", a.name())), &memberships_to_csv(m))?;
    }
    print_report(&format!("bilevel {}", mode.name()), &report);
    Ok(())
}

fn qhi(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let q = &cfg.qhi;
    let axis = Axis::from_name(&q.axis).expect("validated");
    let u = unitary_from_hamiltonian(&pauli(axis).scale_re(q.strength), q.dt);
    let truth = unitary_superoperator(&u)?;
    let theta = cfg.mixture();
    let how = match q.source {
        FitSourceArg::FromStates => Observation::Exact,
        FitSourceArg::FromQst => Observation::Sampled {
            shots: q.shots,
            readout: ReadoutModel::from_mixture(&theta),
            theta,
            mode: cfg.mode.into(),
            seed: cfg.seed,
        },
    };
    let mut trajectories = Vec::new();
    for (j, s) in q.initial_states.iter().enumerate() {
        let t = simulate_trajectory(&truth, &s.to_density()?, q.steps, j, q.dt)?;
        let t = observe_trajectory(&t, &how)?;
        write_atomic(&out.join(format!("trajectory_{j}.jsonl")), trajectory_to_jsonl(&t).as_bytes())?;
        trajectories.push(t);
    }
    let source = match q.source {
        FitSourceArg::FromStates => FitSource::FromStates,
        FitSourceArg::FromQst => FitSource::FromQst,
    };
    let fit = fit_channel(&trajectories, source, &FitOptions::default())?;
    let error = fit.channel.distance(&truth);
    let doc = json!({
        "g": MatrixJson::from_mat4(fit.channel.matrix()),
        "choi": MatrixJson::from_mat4(&fit.channel.choi()),
        "truth": MatrixJson::from_mat4(truth.matrix()),
        "frobenius_error": error,
        "loss": fit.loss,
        "unconstrained_loss": fit.unconstrained_loss,
        "non_unique": fit.non_unique,
        "iterations": fit.iterations,
        "converged": fit.converged,
    });
    write_atomic(&out.join("channel.json"), &to_pretty_json(&doc))?;
    write_atomic(&out.join("loss.csv"), &loss_curve_to_csv(&fit.loss_curve))?;
    println!(
        "channel fit: Frobenius error {error:.3e}, loss {:.3e}, {} iterations{}",
        fit.loss,
        fit.iterations,
        if fit.non_unique { ", data rank-deficient" } else { "" }
    );
    Ok(())
}

fn repro_paper(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let checks = repro::run(cfg.seed, out)?;
    for c in &checks {
        println!("{}", c.line());
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Acceptance(failed))
    }
}

fn plot_iq(cfg: &RunConfig, dataset: &Path, target: Option<&Path>) -> Result<()> {
    let d = load_dataset(dataset)?;
    let path = match target {
        Some(p) => p.to_path_buf(),
        None => out_dir(cfg)?.join(format!("iq_{}.svg", d.observable.name())),
    };
    write_atomic(&path, svg::render(&d).as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}
