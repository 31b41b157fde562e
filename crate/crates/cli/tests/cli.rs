use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use outliergram::sample::write_csv;
use outliergram::simulation;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_outliergram"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn figure3_csv(dir: &Path) -> String {
    let path = dir.join("figure3.csv");
    write_csv(&simulation::figure3_sample(simulation::FIGURE3_SEED), &path).unwrap();
    path.to_str().unwrap().to_owned()
}

fn shape_indices(report: &Value) -> Vec<u64> {
    report["shape_outliers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["index"].as_u64().unwrap())
        .collect()
}

#[test]
fn detect_writes_report_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let input = figure3_csv(dir.path());
    let report = dir.path().join("report.json");
    let svg_dir = dir.path().join("svg");
    let out = run(&[
        "detect",
        "--input",
        &input,
        "--report",
        report.to_str().unwrap(),
        "--svg-dir",
        svg_dir.to_str().unwrap(),
        "--with-fbplot",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("shape outliers (1-based): ["));

    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["schema"], "outliergram/1");
    let shape = shape_indices(&v);
    assert!([50, 51, 53].iter().all(|i| shape.contains(i)), "{shape:?}");
    assert!(!shape.contains(&52));
    assert!(v["magnitude_outliers"].as_array().unwrap().iter().any(|i| i == 52));

    let og = fs::read_to_string(svg_dir.join("outliergram.svg")).unwrap();
    assert!(og.contains(r#"class="parabola""#) && og.contains(r#"class="boundary""#));
    assert!(svg_dir.join("curves.svg").exists());
    assert!(svg_dir.join("fbplot.svg").exists());
}

#[test]
fn report_goes_to_stdout_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let input = figure3_csv(dir.path());
    let out = run(&["detect", "--input", &input]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 54);
    assert!(v.get("seed").is_none());
}

#[test]
fn larger_factor_flags_no_more() {
    let dir = tempfile::tempdir().unwrap();
    let input = figure3_csv(dir.path());
    let count = |factor: &str| {
        let out = run(&["detect", "--input", &input, "--factor", factor]);
        assert!(out.status.success());
        shape_indices(&serde_json::from_slice(&out.stdout).unwrap()).len()
    };
    assert!(count("3.0") <= count("1.5"));
}

#[test]
fn adjusted_detection_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = figure3_csv(dir.path());
    let out = run(&["detect", "--input", &input, "--adjusted", "--seed", "5", "--null-datasets", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["boundary"]["kind"], "adjusted");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["calibration"]["rng"], "chacha8");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = run(&["detect", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "a,1,2,3\nb,1,2\nc,1,2,3\n").unwrap();
    let out = run(&["detect", "--input", ragged.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let tiny = dir.path().join("tiny.csv");
    fs::write(&tiny, "a,1,2,3\nb,1,2,4\n").unwrap();
    let out = run(&["detect", "--input", tiny.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n < 3"));

    let out = run(&["detect", "--input", tiny.to_str().unwrap(), "--factor", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_json_is_deterministic() {
    let args = ["simulate", "--model", "3", "--n", "40", "--c", "0.1", "--runs", "5", "--seed", "3", "--json"];
    let a = run(&args);
    let b = bin().args(args).env("OUTLIERGRAM_THREADS", "1").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["runs"], 5);
    assert!(v["pc_mean"].is_f64());
    assert!(v.get("wall").is_none());
}

#[test]
fn simulate_table_row() {
    let out = run(&["simulate", "--model", "1", "--n", "30", "--c", "0", "--runs", "2", "--method", "fbplot"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().nth(1).unwrap();
    assert!(row.contains("n/a"), "{row}");
    assert!(row.trim_end().ends_with('s'));
}

#[test]
fn simulate_rejects_bad_arguments() {
    assert_eq!(run(&["simulate", "--model", "4"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--model", "1", "--runs", "0"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--model", "1", "--c", "1.5"]).status.code(), Some(2));
    let out = bin()
        .args(["simulate", "--model", "1", "--runs", "1"])
        .env("OUTLIERGRAM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
