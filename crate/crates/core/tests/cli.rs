//! End-to-end checks of the command-line binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhmetric"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn single_line_error(o: &Output, prefix: &str) {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "stderr: {err}");
    assert!(err.starts_with(prefix), "stderr: {err}");
}

#[test]
fn spectrum_csv() {
    let o = run(&[
        "spectrum", "--model", "two", "--t-min", "0.5", "--t-max", "0.5", "--t-step", "0.1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,E1,E2"));
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(row, vec![0.5, 1.5, 2.5]);
}

#[test]
fn empty_rho_list_is_a_config_error() {
    let o = run(&["boundary", "--rho", ""]);
    assert_eq!(o.status.code(), Some(2));
    single_line_error(&o, "error: config:");
}

#[test]
fn unknown_model_is_a_config_error() {
    let o = run(&["spectrum", "--model", "seven"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_and_detects_injected_fault() {
    let ok = run(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let bad = run(&["verify", "--inject-identity-metric"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verify_with_unreachable_threshold_fails_cleanly() {
    let o = run(&["verify", "--tol", "1e-15"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stderr.is_empty() || !String::from_utf8_lossy(&o.stderr).contains("panicked"));
}

#[test]
fn boundary_json_reports_missing_transition_as_null() {
    let o = run(&[
        "boundary", "--model", "two", "--rho", "0", "--t-min", "0.1", "--t-max", "0.5", "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["t_rho"]["0"].is_null());
    assert_eq!(v["transitions"]["0"].as_array().unwrap().len(), 0);
}

#[test]
fn boundary_json_finds_unit_limit() {
    let o = run(&[
        "boundary", "--model", "two", "--rho", "0", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t = v["t_rho"]["0"]["t"].as_f64().unwrap();
    assert!((t - 1.0).abs() <= 1e-10, "t = {t}");
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig3.csv");
    let args = ["metric-scan", "--figure", "3"];
    let direct = stdout(&run(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let o = run(&with_out);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["metric-scan", "--figure", "2"];
    let one = Command::new(env!("CARGO_BIN_EXE_qhmetric"))
        .args(args)
        .env("QHMETRIC_THREADS", "1")
        .output()
        .unwrap();
    let four = run(&[&args[..], &["--threads", "4"]].concat());
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}
