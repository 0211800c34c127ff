use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iqtomo::formats::load_dataset;
use iqtomo::svg::moments;
use iqtomo_core::readout::Label;
use serde_json::Value;

fn iqtomo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqtomo")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn simulate(dir: &Path, seed: &str) {
    let o = iqtomo(&["simulate", "--seed", seed, "--out", "data"], dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_is_deterministic_and_matches_the_fixture() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(a.path(), "11");
    simulate(b.path(), "11");
    for axis in ["x", "y", "z"] {
        let f = format!("data/{axis}.jsonl");
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap());
    }
    let z = load_dataset(&a.path().join("data/z.jsonl")).unwrap();
    let [n0, n1, noise] = z.truth_counts();
    let p: f64 = 0.5 * (1.0 - 0.888);
    let sigma = (1e4 * p * (1.0 - p)).sqrt();
    assert_eq!((n0 + n1, noise), (10_000, 0));
    assert!((n0 as f64 - 1e4 * p).abs() <= 4.0 * sigma, "{n0}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = iqtomo(&["simulate", "--n", "0"], d);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&iqtomo(&["simulate", "--bogus"], d)), 1);
    assert_eq!(code(&iqtomo(&["tomo", "--mode", "fuzzy"], d)), 1);

    fs::write(d.join("bad.json"), "{\"seed\": 1, \"colour\": \"red\"}").unwrap();
    assert_eq!(code(&iqtomo(&["--config", "bad.json", "simulate"], d)), 1);
    assert_eq!(code(&iqtomo(&["--config", "missing.json", "simulate"], d)), 2);

    // Missing axis file.
    simulate(d, "3");
    fs::remove_file(d.join("data/y.jsonl")).unwrap();
    assert_eq!(code(&iqtomo(&["tomo", "--data", "data"], d)), 2);

    // Output directory blocked by a regular file.
    fs::write(d.join("blocker"), "").unwrap();
    assert_eq!(code(&iqtomo(&["simulate", "--out", "blocker/sub"], d)), 2);

    // Empty dataset.
    fs::write(d.join("empty.jsonl"), "{\"obs\":\"x\",\"seed\":0}\n").unwrap();
    assert_eq!(code(&iqtomo(&["plot-iq", "empty.jsonl"], d)), 1);
    assert_eq!(code(&iqtomo(&["--help"], d)), 0);
}

fn table(path: PathBuf) -> Vec<(String, [f64; 3])> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["method", "b_x", "b_y", "b_z"]);
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].to_string(), [1, 2, 3].map(|k| rec[k].parse().unwrap()))
    }).collect()
}

#[test]
fn tomography_commands_recover_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "5");
    fs::write(d.join("cfg.json"), format!("{{\"reference\": {}}}", serde_json::to_string(&iqtomo::formats::MatrixJson::from_density(&iqtomo::config::rho22())).unwrap())).unwrap();
    let o = iqtomo(&["--config", "cfg.json", "tomo", "--data", "data", "--out", "t1"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&iqtomo(&["--config", "cfg.json", "tomo", "--data", "data", "--out", "t2"], d)), 0);
    for f in ["tomo_report.json", "tomo_table.csv"] {
        assert_eq!(fs::read(d.join("t1").join(f)).unwrap(), fs::read(d.join("t2").join(f)).unwrap());
    }

    // The counts row is the exact label tally.
    let rows = table(d.join("t1/tomo_table.csv"));
    assert_eq!(rows[0].0, "counts");
    for (k, axis) in ["x", "y", "z"].iter().enumerate() {
        let [n0, n1, _] = load_dataset(&d.join(format!("data/{axis}.jsonl"))).unwrap().truth_counts();
        assert_eq!(rows[0].1[k], (n0 as f64 - n1 as f64) / (n0 + n1) as f64);
    }
    assert_eq!(rows[1].0, "em_hard");

    let report = read_json(d.join("t1/tomo_report.json"));
    assert!(report["frobenius_to_ref"].as_f64().unwrap() <= 0.03);
    assert_eq!(report["mode"], "hard");

    for (mode, solver) in [("soft", "closed"), ("hard", "pg"), ("assignment", "closed")] {
        let out = format!("bl_{mode}");
        let o = iqtomo(&["--config", "cfg.json", "bilevel", "--data", "data", "--mode", mode, "--solver", solver, "--out", &out], d);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let r = read_json(d.join(&out).join("bilevel_report.json"));
        assert_eq!(r["mode"], mode);
        assert!(r["frobenius_to_ref"].as_f64().unwrap() <= 0.03, "{mode}: {r}");
        assert!(d.join(&out).join("memberships_z.csv").exists());
    }

    let o = iqtomo(&["discriminate", "data/z.jsonl", "data/x.jsonl", "--mode", "soft", "--out", "disc"], d);
    assert_eq!(code(&o), 0);
    let mut r = csv::Reader::from_path(d.join("disc/b.csv")).unwrap();
    let rows: Vec<_> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][2].parse::<f64>().unwrap() + 0.888).abs() < 0.03);
    assert!(d.join("disc/memberships_z.csv").exists());
}

#[test]
fn plot_is_deterministic_and_marks_the_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("two.jsonl"),
        "{\"obs\":\"x\",\"seed\":0}\n{\"i\":1.0,\"q\":2.0,\"truth\":\"zero\"}\n{\"i\":-1.0,\"q\":2.5}\n",
    )
    .unwrap();
    assert_eq!(code(&iqtomo(&["plot-iq", "two.jsonl", "a.svg"], d)), 0);
    assert_eq!(code(&iqtomo(&["plot-iq", "two.jsonl", "b.svg"], d)), 0);
    let svg = fs::read_to_string(d.join("a.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
    assert_eq!(svg.as_bytes(), fs::read(d.join("b.svg")).unwrap());

    simulate(d, "8");
    assert_eq!(code(&iqtomo(&["plot-iq", "data/x.jsonl", "--out", "plots"], d)), 0);
    let svg = fs::read_to_string(d.join("plots/iq_x.svg")).unwrap();
    let data = load_dataset(&d.join("data/x.jsonl")).unwrap();
    for (label, name, center) in [(Label::Zero, "zero", [2.5, 2.0]), (Label::One, "one", [-2.5, 2.0])] {
        let pts: Vec<_> = data.samples.iter().filter(|s| s.truth == Some(label)).map(|s| s.point()).collect();
        let (mean, _) = moments(&pts);
        let tag = format!("data-label=\"{name}\" data-i=\"");
        let at = svg.find(&tag).unwrap() + tag.len();
        let rest = &svg[at..];
        let i: f64 = rest[..rest.find('"').unwrap()].parse().unwrap();
        let q_at = rest.find("data-q=\"").unwrap() + 8;
        let q: f64 = rest[q_at..q_at + rest[q_at..].find('"').unwrap()].parse().unwrap();
        assert!((i - mean[0]).abs() <= 0.05 && (q - mean[1]).abs() <= 0.05);
        assert!((i - center[0]).abs() <= 0.1 && (q - center[1]).abs() <= 0.1);
    }
    assert_eq!(svg.matches("class=\"sigma2\"").count(), 2);
}

#[test]
fn qhi_recovers_the_channel() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = iqtomo(&["qhi", "--out", "exact"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ch = read_json(d.join("exact/channel.json"));
    assert!(ch["frobenius_error"].as_f64().unwrap() <= 1e-6);
    let mut r = csv::Reader::from_path(d.join("exact/loss.csv")).unwrap();
    let losses: Vec<f64> = r.records().map(|x| x.unwrap()[1].parse().unwrap()).collect();
    assert!(losses.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    let traj = fs::read_to_string(d.join("exact/trajectory_0.jsonl")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 101);

    fs::write(d.join("q.json"), "{\"qhi\": {\"source\": \"from_qst\", \"steps\": 60}}").unwrap();
    let o = iqtomo(&["--config", "q.json", "qhi", "--out", "sampled"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ch = read_json(d.join("sampled/channel.json"));
    assert!(ch["frobenius_error"].as_f64().unwrap() <= 0.05);
}

#[test]
fn repro_bundle_passes_and_flags_the_erratum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = iqtomo(&["repro-paper", "--out", "bundle"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let checks = fs::read_to_string(d.join("bundle/checks.txt")).unwrap();
    assert!(!checks.contains("FAIL"));
    let f = read_json(d.join("bundle/frobenius.json"));
    assert_eq!(f["qutip_vs_24"]["erratum"], true);
    assert!((f["qutip_vs_24"]["recomputed"].as_f64().unwrap() - 0.01208).abs() < 5e-5);
    assert!((f["qutip_vs_12"]["recomputed"].as_f64().unwrap() - 0.0076).abs() < 5e-5);
    let rows = table(d.join("bundle/table3.csv"));
    assert_eq!(rows[0], ("qutip (published)".to_string(), [-0.0006, -0.4674, -0.892]));
    assert!(d.join("bundle/em_tables.json").exists());
}
