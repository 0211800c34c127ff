use std::path::Path;
use std::time::Instant;

use iqtomo::config::{rho22, RunConfig};
use iqtomo::formats::{
    dataset_from_jsonl, dataset_to_csv, dataset_to_jsonl, load_dataset, memberships_to_csv, save_dataset,
    trajectory_from_jsonl, trajectory_to_jsonl, MatrixJson, MixtureJson, ReportJson,
};
use iqtomo::Error;
use iqtomo_core::discriminate::{memberships, BVector, ComponentParams, MixtureParams, Mode, NoiseDisc};
use iqtomo_core::qcore::{pauli, unitary_from_hamiltonian, Axis, DensityMatrix};
use iqtomo_core::qhi::{observe_trajectory, simulate_trajectory, unitary_superoperator, Observation};
use iqtomo_core::qst::{qst_closed_form, tomography_report};
use iqtomo_core::readout::{synthesize_iq, ContaminationSpec, IQDataset, IQSample, Label};
use serde_json::Value;

fn contaminated() -> IQDataset {
    let theta = MixtureParams::new(
        ComponentParams::new(0.4, [2.5, 2.0], [[1.2, 0.1], [0.1, 0.9]]).unwrap(),
        ComponentParams::isotropic(0.4, [-2.5, 2.0], 1.0).unwrap(),
        0.2,
        NoiseDisc::default(),
    )
    .unwrap();
    let c = ContaminationSpec { weight: 0.2, disc: NoiseDisc::default() };
    synthesize_iq(Axis::Y, 300, 500, &theta.zero, &theta.one, &c, 77).unwrap()
}

#[test]
fn dataset_round_trips_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let d = contaminated();
    let path = dir.path().join("y.jsonl");
    save_dataset(&d, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), d);

    // Unlabeled samples and a missing mixture survive too.
    let bare = IQDataset::new(Axis::Z, vec![IQSample::new(0.1, -0.2, None), IQSample::new(1e-300, 3.5, Some(Label::Noise))], u64::MAX, None).unwrap();
    assert_eq!(dataset_from_jsonl(&dataset_to_jsonl(&bare), Path::new("mem")).unwrap(), bare);
}

#[test]
fn missing_obs_is_named_in_the_error() {
    let text = "{\"seed\":1,\"mixture\":null}\n{\"i\":0.0,\"q\":0.0,\"truth\":null}\n";
    match dataset_from_jsonl(text, Path::new("bad.jsonl")) {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 1);
            assert!(message.contains("obs"), "{message}");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn bad_sample_reports_its_line() {
    let text = "{\"obs\":\"x\",\"seed\":1}\n{\"i\":0.0,\"q\":0.0}\n{\"i\":1.0,\"truth\":\"one\"}\n";
    match dataset_from_jsonl(text, Path::new("bad.jsonl")) {
        Err(e @ Error::Parse { line: 3, .. }) => assert!(e.to_string().contains("bad.jsonl:3")),
        other => panic!("expected parse error on line 3, got {other:?}"),
    }
    let unknown = "{\"obs\":\"x\",\"seed\":1}\n{\"i\":0.0,\"q\":0.0,\"truth\":\"two\"}\n";
    assert!(matches!(dataset_from_jsonl(unknown, Path::new("u")), Err(Error::Parse { line: 2, .. })));
    let header_only = "{\"obs\":\"x\",\"seed\":1}\n";
    assert!(dataset_from_jsonl(header_only, Path::new("h")).is_err());
}

#[test]
fn ten_thousand_samples_parse_quickly() {
    let theta = MixtureParams::reference();
    let d = synthesize_iq(Axis::Z, 560, 9440, &theta.zero, &theta.one, &ContaminationSpec::none(), 1).unwrap();
    let text = dataset_to_jsonl(&d);
    let start = Instant::now();
    let back = dataset_from_jsonl(&text, Path::new("mem")).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(back.len(), 10_000);
    assert!(elapsed.as_millis() < 100, "{elapsed:?}");
}

#[test]
fn csv_exports_have_the_documented_columns() {
    let d = contaminated();
    let text = String::from_utf8(dataset_to_csv(&d)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("obs,i,q,truth"));
    assert_eq!(lines.count(), d.len());

    let m = memberships(&d.samples, &d.mixture.unwrap(), Mode::Soft);
    let text = String::from_utf8(memberships_to_csv(&m)).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap(), vec!["sample_index", "gamma0", "gamma1", "gamma_noise"]);
    for (k, r) in rows.records().enumerate() {
        let r = r.unwrap();
        assert_eq!(r[0].parse::<usize>().unwrap(), k);
        let g: Vec<f64> = (1..4).map(|c| r[c].parse().unwrap()).collect();
        assert_eq!(g, m.rows[k].to_vec());
    }
}

#[test]
fn mixture_json_round_trips_and_validates() {
    let m = contaminated().mixture.unwrap();
    let json = serde_json::to_string(&MixtureJson::from(&m)).unwrap();
    let back: MixtureJson = serde_json::from_str(&json).unwrap();
    assert_eq!(back.to_params().unwrap(), m);
    let mut bad = back;
    bad.alpha = [0.5, 0.5, 0.5];
    assert!(bad.to_params().is_err());
    bad = back;
    bad.sigma[0] = [[1.0, 2.0], [2.0, 1.0]];
    assert!(bad.to_params().is_err());
}

/// Minimal checker for the subset of JSON Schema used by the published schema.
fn conforms(value: &Value, schema: &Value) -> bool {
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        return options.contains(value);
    }
    let type_ok = |t: &str| match t {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "number" => value.is_number(),
        "null" => value.is_null(),
        "string" => value.is_string(),
        _ => false,
    };
    let ok = match schema.get("type") {
        Some(Value::String(t)) => type_ok(t),
        Some(Value::Array(ts)) => ts.iter().filter_map(Value::as_str).any(type_ok),
        _ => true,
    };
    if !ok {
        return false;
    }
    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if value.as_f64().is_some_and(|v| v < min) {
            return false;
        }
    }
    if let (Some(obj), Some(props)) = (value.as_object(), schema.get("properties").and_then(Value::as_object)) {
        let required = schema["required"].as_array().unwrap();
        if !required.iter().all(|k| obj.contains_key(k.as_str().unwrap())) {
            return false;
        }
        if obj.keys().any(|k| !props.contains_key(k)) {
            return false;
        }
        return obj.iter().all(|(k, v)| conforms(v, &props[k]));
    }
    if let Some(arr) = value.as_array() {
        let len_ok = schema.get("minItems").and_then(Value::as_u64).is_none_or(|n| arr.len() as u64 >= n)
            && schema.get("maxItems").and_then(Value::as_u64).is_none_or(|n| arr.len() as u64 <= n);
        return len_ok && schema.get("items").is_none_or(|s| arr.iter().all(|v| conforms(v, s)));
    }
    true
}

#[test]
fn report_matches_schema_and_round_trips() {
    let schema: Value = serde_json::from_str(include_str!("../schema/report.schema.json")).unwrap();
    let q = qst_closed_form(&BVector { b: [0.01, -0.47, -0.89], delta: [0.01, 0.0088, 0.0045] }).unwrap();
    for (mode, reference) in [(Some(Mode::Soft), Some(rho22())), (None, None)] {
        let report = tomography_report(&q, mode, reference.as_ref());
        let json = ReportJson::from(&report);
        let value = serde_json::to_value(&json).unwrap();
        assert!(conforms(&value, &schema), "{value}");
        let back: ReportJson = serde_json::from_value(value).unwrap();
        assert_eq!(back.to_report().unwrap(), report);
    }
    let mut broken = serde_json::to_value(ReportJson::from(&tomography_report(&q, None, None))).unwrap();
    broken["extra"] = Value::Bool(true);
    assert!(!conforms(&broken, &schema));
}

#[test]
fn density_json_rejects_invalid_states() {
    let j = MatrixJson::from_density(&DensityMatrix::excited());
    assert_eq!(j.to_density().unwrap(), DensityMatrix::excited());
    let bad = MatrixJson { re: vec![vec![1.0, 0.0], vec![0.0, 1.0]], im: vec![vec![0.0, 0.0], vec![0.0, 0.0]] };
    assert!(bad.to_density().is_err());
    let ragged = MatrixJson { re: vec![vec![1.0]], im: vec![vec![0.0]] };
    assert!(ragged.to_mat2().is_err());
}

#[test]
fn trajectory_round_trips() {
    let g = unitary_superoperator(&unitary_from_hamiltonian(&pauli(Axis::X).scale_re(0.6), 0.02)).unwrap();
    let t = simulate_trajectory(&g, &DensityMatrix::ground(), 20, 4, 0.02).unwrap();
    let t = observe_trajectory(&t, &Observation::Exact).unwrap();
    let text = trajectory_to_jsonl(&t);
    assert!(text.starts_with("{\"id\":4,\"dt\":0.02}\n"));
    let back = trajectory_from_jsonl(&text, Path::new("t")).unwrap();
    assert_eq!(back, t);

    // Observations only: states are dropped, b kept.
    let stripped: String = text
        .lines()
        .enumerate()
        .map(|(k, l)| {
            if k == 0 {
                format!("{l}\n")
            } else {
                let mut v: Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("rho");
                format!("{v}\n")
            }
        })
        .collect();
    let obs = trajectory_from_jsonl(&stripped, Path::new("t")).unwrap();
    assert!(obs.states.is_empty());
    assert_eq!(obs.observations, t.observations);
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    let p = Path::new("cfg.json");
    assert_eq!(RunConfig::from_json("{}", p).unwrap(), RunConfig::default());
    assert!(matches!(RunConfig::from_json("{\"sed\": 1}", p), Err(Error::Parse { .. })));
    assert!(matches!(RunConfig::from_json("{\"qhi\": {\"stesp\": 3}}", p), Err(Error::Parse { .. })));
    assert!(matches!(RunConfig::from_json("{\"n_per_axis\": 0}", p), Err(Error::Invalid(_))));
    assert!(RunConfig::from_json("{\"mode\": \"fuzzy\"}", p).is_err());
    let cfg = RunConfig::from_json("{\"seed\": 7, \"mode\": \"soft\", \"solver\": \"pg\", \"qhi\": {\"source\": \"from_qst\"}}", p).unwrap();
    assert_eq!(cfg.seed, 7);
    let full = serde_json::to_string(&RunConfig::default()).unwrap();
    assert_eq!(RunConfig::from_json(&full, p).unwrap(), RunConfig::default());
}

#[test]
fn shipped_config_is_valid() {
    let cfg = RunConfig::from_json(include_str!("../../../configs/section5.json"), Path::new("section5.json")).unwrap();
    assert!(iqtomo_core::qcore::frobenius_distance(&cfg.state(), &rho22()) < 1e-12);
    assert_eq!(cfg.mixture(), MixtureParams::reference());
}
