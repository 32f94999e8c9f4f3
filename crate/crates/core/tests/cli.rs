use std::path::{Path, PathBuf};
use std::process::Command;

use freeformer::io::read_measure_csv;
use freeformer::spectra::measure_distance;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_freeformer"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn empty_spec_array_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("empty.json");
    std::fs::write(&spec, "[]").unwrap();
    let (code, _) = run(&dir.path().join("out"), &["spectrum", spec.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn unwritable_out_dir_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let (code, _) = run(&blocker.join("sub"), &["convolve", "semicircle:1", "semicircle:1"]);
    assert_eq!(code, 3);
}

#[test]
fn starved_solver_exits_4_with_residual() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["convolve", "semicircle:1", "semicircle:1", "--max-iter", "1"]);
    assert_eq!(code, 4);
    let m = manifest(dir.path());
    assert_eq!(m["exit_code"], 4);
    assert!(m["residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn unknown_token_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut seq: Value = serde_json::from_str(&std::fs::read_to_string(data("sequence.json")).unwrap()).unwrap();
    seq["sequence"][1] = Value::from("zebra");
    let path = dir.path().join("seq.json");
    std::fs::write(&path, seq.to_string()).unwrap();
    let (code, stderr) = run(&dir.path().join("out"), &["attention-demo", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("zebra"), "{stderr}");
}

#[test]
fn identity_token_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["entropy", data("entropy-identity.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let m = manifest(dir.path());
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn flat_stack_has_one_zero_row() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["depth-scan", data("depth-flat.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("depth_report.json")).unwrap()).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["layer"], 0);
    assert!(rows[0]["w1"].as_f64().unwrap() < 1e-12);
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let (code, _) = run(&first, &["--seed", "5", "convolve", "semicircle:1", "semicircle:0.5", "--method", "montecarlo", "--dim", "100", "--trials", "2"]);
    assert_eq!(code, 0);
    let (code, _) = run(&second, &["replay", first.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let a = std::fs::read(first.join("convolution.csv")).unwrap();
    let b = std::fs::read(second.join("convolution.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(manifest(&second)["seed"], 5);
}

#[test]
fn montecarlo_seed_matters() {
    let dir = tempfile::tempdir().unwrap();
    let csv = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let (code, _) = run(&out, &["--seed", seed, "convolve", "semicircle:1", "semicircle:1", "--method", "montecarlo", "--dim", "80", "--trials", "1"]);
        assert_eq!(code, 0);
        std::fs::read(out.join("convolution.csv")).unwrap()
    };
    assert_eq!(csv("1", "a"), csv("1", "b"));
    assert_ne!(csv("1", "c"), csv("2", "d"));
}

#[test]
fn subordination_agrees_with_montecarlo() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("sub");
    let mc = dir.path().join("mc");
    assert_eq!(run(&sub, &["convolve", "semicircle:1", "semicircle:1"]).0, 0);
    assert_eq!(run(&mc, &["convolve", "semicircle:1", "semicircle:1", "--method", "montecarlo", "--dim", "400", "--trials", "4"]).0, 0);
    let a = read_measure_csv(&sub.join("convolution.csv")).unwrap();
    let b = read_measure_csv(&mc.join("convolution.csv")).unwrap();
    let d = measure_distance(&a, &b);
    assert!(d.wasserstein1 < 0.05, "{d:?}");
}
