use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fibremem::{decompose, propagate_unraveled, transmissivity_spectrum, ChannelParams, GaussianState};
use nalgebra::{DMatrix, DVector};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fibremem"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let s = schema(schema_name);
    let validator = jsonschema::validator_for(&s).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

#[test]
fn spectrum_rows_follow_library() {
    let (h, rows) = csv(&ok(&["spectrum", "--n", "4", "--lambda", "0.3", "--mu", "0.2"]));
    assert_eq!(h, ["j", "eta_j", "eta_symbol"]);
    let lib = transmissivity_spectrum(4, &ChannelParams::new(0.3, 0.2).unwrap()).unwrap();
    assert_eq!(col(&h, &rows, "eta_j"), lib.values());
    assert_eq!(col(&h, &rows, "j"), [1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn memoryless_spectrum_is_constant() {
    let (h, rows) = csv(&ok(&["spectrum", "--n", "16", "--lambda", "0.45", "--mu", "0"]));
    assert!(col(&h, &rows, "eta_j").iter().all(|v| (v - 0.45).abs() < 1e-12));
    assert!(col(&h, &rows, "eta_symbol").iter().all(|&v| v == 0.45));
}

#[test]
fn tail_plot_dataset() {
    let (h, rows) = csv(&ok(&["spectrum", "--n", "60", "--lambda", "0.3", "--mu", "0.2"]));
    assert_eq!(rows.len(), 60);
    let eta = col(&h, &rows, "eta_j");
    assert!(eta.windows(2).all(|w| w[0] <= w[1]));
    assert!(eta[59] <= 0.631320 + 1e-10);
    let doc: Value =
        serde_json::from_str(&ok(&["spectrum", "--n", "6", "--lambda", "0.3", "--mu", "0.2", "--model", "lim", "--format", "json"]))
            .unwrap();
    assert_valid("spectrum.schema.json", &doc);
    assert_eq!(doc["meta"]["model"], "lim");
}

#[test]
fn capacity_examples() {
    let (h, rows) = csv(&ok(&["capacity", "--lambda", "0.5", "--mu", "0", "--kind", "k"]));
    assert!((col(&h, &rows, "value")[0] - 1.0).abs() < 1e-9);
    let (h, rows) = csv(&ok(&["capacity", "--lambda", "0.5", "--mu", "0", "--kind", "q"]));
    assert_eq!(col(&h, &rows, "value")[0], 0.0);

    let doc: Value =
        serde_json::from_str(&ok(&["capacity", "--lambda", "0.3", "--mu", "0.2", "--kind", "k", "--format", "json"])).unwrap();
    assert_valid("capacity.schema.json", &doc);
    let row = &doc["rows"][0];
    let (v, lo, hi) = (row["value"].as_f64().unwrap(), row["lower"].as_f64().unwrap(), row["upper"].as_f64().unwrap());
    assert!(lo <= v && v <= hi && hi - lo < 1e-4);
    assert_eq!(doc["meta"]["version"], env!("CARGO_PKG_VERSION"));

    let doc: Value = serde_json::from_str(&ok(&[
        "capacity", "--lambda", "0.8", "--mu", "0.5", "--nu", "0.2", "--kind", "q", "--format", "json",
    ]))
    .unwrap();
    assert_valid("capacity.schema.json", &doc);
    assert!(doc["rows"][0]["upper"].is_null());
    assert_eq!(doc["rows"][0]["exact"], false);
}

#[test]
fn region_zero_cells_follow_threshold_curve() {
    let text = ok(&["region", "--grid", "0.05:0.9:15", "--kind", "q"]);
    let (h, rows) = csv(&text);
    assert_eq!(h, ["lambda", "mu", "value", "lower", "upper", "status", "threshold", "threshold_sufficient"]);
    assert_eq!(rows.len(), 225);
    let (l, m, v) = (col(&h, &rows, "lambda"), col(&h, &rows, "mu"), col(&h, &rows, "value"));
    let mut checked = 0;
    for i in 0..rows.len() {
        let lb = (1.0 / l[i]).log2();
        let thr = ((lb - 1.0) / (lb + 1.0)).max(0.0);
        let s = m[i].sqrt();
        if (s - thr).abs() < 1e-3 {
            continue;
        }
        checked += 1;
        assert_eq!(v[i] > 0.0, s > thr, "lambda={} mu={}", l[i], m[i]);
        assert_eq!(rows[i][5] == "positive", s > thr);
    }
    assert!(checked > 200);
    // grid order is lambda-major regardless of scheduling
    assert!(l.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(text, ok(&["region", "--grid", "0.05:0.9:15", "--kind", "q"]));
}

#[test]
fn region_two_way_equals_key() {
    let a = csv(&ok(&["region", "--grid", "0.05:0.9:8", "--kind", "q2"]));
    let b = csv(&ok(&["region", "--grid", "0.05:0.9:8", "--kind", "k"]));
    assert_eq!(col(&a.0, &a.1, "value"), col(&b.0, &b.1, "value"));
}

#[test]
fn region_single_cell_and_json() {
    let (h, rows) = csv(&ok(&["region", "--grid", "0.25:0.25:1", "--kind", "q"]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][5], "positive");
    assert!((col(&h, &rows, "threshold")[0] - 1.0 / 3.0).abs() < 1e-12);
    let doc: Value = serde_json::from_str(&ok(&[
        "region", "--lambda-grid", "0.1:0.5:3", "--mu-grid", "0.2:0.4:2", "--kind", "q", "--nu", "0.3", "--format", "json",
    ]))
    .unwrap();
    assert_valid("region.schema.json", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn converge_modes() {
    let (h, rows) = csv(&ok(&["converge", "--mode", "tail", "--n-list", "4,10,60", "--lambda", "0.3", "--mu", "0.2"]));
    let dev = col(&h, &rows, "max_deviation");
    assert!(dev.windows(2).all(|w| w[1] < w[0]));

    let (h, rows) = csv(&ok(&["converge", "--mode", "finite-m", "--n", "6", "--m-list", "1,10,100", "--lambda", "0.4", "--mu", "0"]));
    assert!(col(&h, &rows, "error").iter().all(|&e| e < 1e-14));

    let out = ok(&[
        "converge", "--mode", "finite-m", "--n", "8", "--m-list", "10,100,1000,10000", "--lambda", "0.3", "--mu", "0.2",
        "--format", "json",
    ]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_valid("converge.schema.json", &doc);
    let errs: Vec<f64> = doc["rows"].as_array().unwrap().iter().map(|r| r["error"].as_f64().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));

    let doc: Value = serde_json::from_str(&ok(&[
        "converge", "--mode", "tail", "--n-list", "4,8", "--lambda", "0.3", "--mu", "0.2", "--format", "json",
    ]))
    .unwrap();
    assert_valid("converge.schema.json", &doc);
}

fn write_state(dir: &Path, state: &GaussianState<f64>) -> PathBuf {
    let path = dir.join("state.json");
    std::fs::write(&path, serde_json::to_string(state).unwrap()).unwrap();
    path
}

fn read_state(text: &str) -> GaussianState<f64> {
    let v: Value = serde_json::from_str(text).unwrap();
    assert_valid("gaussian_state.schema.json", &v);
    serde_json::from_value(v).unwrap()
}

#[test]
fn simulate_examples() {
    let dir = tempfile::tempdir().unwrap();

    let vac = write_state(dir.path(), &GaussianState::vacuum(3));
    let out = read_state(&ok(&["simulate", "--state", vac.to_str().unwrap(), "--lambda", "0", "--mu", "0.4", "--nu", "0.5"]));
    assert!((out.covariance() - DMatrix::<f64>::identity(6, 6) * 2.0).amax() < 1e-12);
    assert!(out.mean().amax() < 1e-12);

    let one = write_state(dir.path(), &GaussianState::vacuum(1));
    let out = read_state(&ok(&["simulate", "--state", one.to_str().unwrap(), "--lambda", "0.5", "--mu", "0", "--nu", "1"]));
    assert!((out.covariance() - DMatrix::<f64>::identity(2, 2) * 2.0).amax() < 1e-12);

    let mean = DVector::from_vec(vec![1.0, -0.5, 0.3, 2.0, -1.2, 0.7]);
    let coh = GaussianState::coherent(mean).unwrap();
    let path = write_state(dir.path(), &coh);
    let out_path = dir.path().join("out.json");
    ok(&[
        "simulate", "--state", path.to_str().unwrap(), "--n", "3", "--lambda", "0.5", "--mu", "0.3", "--out",
        out_path.to_str().unwrap(),
    ]);
    let out = read_state(&std::fs::read_to_string(&out_path).unwrap());
    let params = ChannelParams::new(0.5, 0.3).unwrap();
    let routed = propagate_unraveled(&coh, &decompose(3, &params).unwrap(), 0.0).unwrap();
    assert!((out.covariance() - routed.covariance()).amax() < 1e-10);
    assert!((out.mean() - routed.mean()).amax() < 1e-10);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["capacity", "--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["capacity", "--lambda", "1.5", "--mu", "0.2"]).status.code(), Some(1));
    assert_eq!(run(&["capacity", "--mu", "0.2"]).status.code(), Some(1));
    assert_eq!(run(&["capacity", "--lambda", "0.3", "--mu", "0.2", "--kind", "x"]).status.code(), Some(1));
    assert_eq!(run(&["region", "--grid", "0.9:0.1:3"]).status.code(), Some(1));
    assert_eq!(run(&["converge", "--n", "4", "--m-list", "10,5", "--lambda", "0.3", "--mu", "0.2"]).status.code(), Some(1));
    assert_eq!(run(&["capacity", "--lambda", "1", "--mu", "0.2"]).status.code(), Some(1));
    // an unreachable tolerance exhausts the quadrature budget
    assert_eq!(run(&["capacity", "--lambda", "0.3", "--mu", "0.9", "--tol", "1e-300"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n":1,"mean":[0,0],"covariance":[[0.1,0],[0,0.1]]}"#).unwrap();
    assert_eq!(run(&["simulate", "--state", bad.to_str().unwrap(), "--lambda", "0.5", "--mu", "0"]).status.code(), Some(1));
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(run(&["simulate", "--state", bad.to_str().unwrap(), "--lambda", "0.5", "--mu", "0"]).status.code(), Some(1));
    let vac = write_state(dir.path(), &GaussianState::vacuum(2));
    assert_eq!(
        run(&["simulate", "--state", vac.to_str().unwrap(), "--n", "3", "--lambda", "0.5", "--mu", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"lambda": 0.5, "mu": 0.0, "kind": "k", "format": "json"}"#).unwrap();
    let doc: Value = serde_json::from_str(&ok(&["capacity", "--config", cfg.to_str().unwrap()])).unwrap();
    assert!((doc["rows"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let (h, rows) = csv(&ok(&["capacity", "--config", cfg.to_str().unwrap(), "--kind", "q", "--format", "csv"]));
    assert_eq!(col(&h, &rows, "value")[0], 0.0);

    std::fs::write(&cfg, r#"{"lambda": 0.5, "typo": 1}"#).unwrap();
    assert_eq!(run(&["capacity", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let args = ["spectrum", "--n", "32", "--lambda", "0.7", "--mu", "0.6", "--gamma", "0.9", "--format", "json"];
    assert_eq!(ok(&args), ok(&args));
}
