use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HEADER: &str = "t,p_ex,p_gr,p_ex_theory,p_gr_theory,purity_s,purity_r,p_c,eta,norm_err";

fn relax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relax"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn small_run(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--n1", "60", "--samples", "40", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    relax(&args)
}

#[test]
fn run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let summary = json_stdout(&small_run(dir.path(), &[]));
    assert_eq!(summary["n_upper"], 60);
    assert_eq!(summary["n_lower"], 30);

    let csv = fs::read_to_string(dir.path().join("run_n1-60_seed-0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 40);
    for row in &rows {
        assert_eq!(row.len(), 10);
        assert!((row[1] + row[2] - 1.0).abs() < 1e-11);
        assert!(row[9] < 1e-9);
    }
    // 12 significant digits: one leading digit plus eleven decimals.
    let cell = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.len(), 13, "cell {cell}");

    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run_n1-60_seed-0.json")).unwrap()).unwrap();
    assert_eq!(sidecar["master_seed"], 1);
    assert!(sidecar["regime"]["cond_330"].is_number());
    assert!(sidecar["summary"]["fit"].is_object());
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(small_run(a.path(), &["--seed", "17"]).status.success());
    assert!(small_run(b.path(), &["--seed", "17", "--sequential"]).status.success());
    for name in ["run_n1-60_seed-0.csv", "run_n1-60_seed-0.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let c = tempfile::tempdir().unwrap();
    assert!(small_run(c.path(), &["--seed", "18"]).status.success());
    assert_ne!(
        fs::read(a.path().join("run_n1-60_seed-0.csv")).unwrap(),
        fs::read(c.path().join("run_n1-60_seed-0.csv")).unwrap()
    );
}

#[test]
fn zero_coupling_needs_explicit_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_run(dir.path(), &["--coupling", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = small_run(dir.path(), &["--coupling", "0", "--t-max", "500"]);
    let summary = json_stdout(&out);
    assert_eq!(summary["theory_rate"], 0.0);
    let csv = fs::read_to_string(dir.path().join("run_n1-60_seed-0.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let p_ex: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(p_ex, 0.0);
    }
}

#[test]
fn regime_default_passes() {
    let report = json_stdout(&relax(&["regime"]));
    for key in ["pass_330", "pass_301", "pass_302", "pass_320", "all_pass"] {
        assert_eq!(report[key], true, "{key}");
    }
    let cond = report["cond_330"].as_f64().unwrap();
    let want = 2.0 * std::f64::consts::PI.powi(2) / 400.0;
    assert!((cond - want).abs() < 1e-12 * want);
}

#[test]
fn regime_failures_still_exit_zero() {
    let report = json_stdout(&relax(&["regime", "--n1", "4", "--n0", "4"]));
    assert_eq!(report["pass_330"], false);
    assert_eq!(report["all_pass"], false);

    let report = json_stdout(&relax(&["regime", "--coupling", "0"]));
    assert_eq!(report["cond_302"], 0.0);
    assert_eq!(report["pass_302"], false);
}

#[test]
fn sweep_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = relax(&[
        "sweep",
        "--sizes",
        "20,40",
        "--seeds",
        "2",
        "--samples",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary = json_stdout(&out);
    assert_eq!(summary["sizes"].as_array().unwrap().len(), 2);
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 2);
    for n in [20, 40] {
        for k in 0..2 {
            assert!(dir.path().join(format!("sweep_n1-{n}_seed-{k}.csv")).exists());
        }
    }
    assert!(dir.path().join("sweep_summary.json").exists());
}

#[test]
fn hsa_check_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = relax(&[
        "hsa-check",
        "--n1",
        "40",
        "--mc-samples",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report = json_stdout(&out);
    assert_eq!(report["base"]["n_samples"], 50);
    assert_eq!(report["doubled"]["n_samples"], 50);
    assert!(dir.path().join("hsa_check.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"n_upper": 30, "n_samples": 12, "seed": 5}"#).unwrap();
    let out = relax(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "15",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary = json_stdout(&out);
    assert_eq!(summary["n_upper"], 30);
    assert_eq!(summary["n_samples"], 15);
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run_n1-30_seed-0.json")).unwrap()).unwrap();
    assert_eq!(sidecar["master_seed"], 5);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(relax(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(relax(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(relax(&["regime", "--n1", "0"]).status.code(), Some(2));
    assert_eq!(relax(&["regime", "--samples", "1"]).status.code(), Some(2));
    assert_eq!(relax(&["regime", "--spacing-lower", "0.3"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"n_uper": 30}"#).unwrap();
    assert_eq!(relax(&["regime", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(relax(&["regime", "--config", missing.to_str().unwrap()]).status.code(), Some(3));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = small_run(&blocker, &[]);
    assert_eq!(out.status.code(), Some(3));
}
