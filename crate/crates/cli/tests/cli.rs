use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, command: &str, config: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{out}.config.json"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fakewidth"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .env_remove("FAKEWIDTH_WORKERS")
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not a JSON record ({e}): {stderr}"))
}

const SWEEP: &str = r#"{
    "trick_set": {"kind": "sparse_norm", "n": 30, "s": 3},
    "distribution": {"kind": "gaussian", "n": 30},
    "radii": {"min": 1, "max": 12, "count": 8},
    "trials": 2000,
    "seed": 5
}"#;

#[test]
fn width_reports_the_gamma_ratio_value() {
    let dir = workdir("width");
    let cfg = r#"{
        "trick_set": {"kind": "norm_threshold", "n": 100},
        "distribution": {"kind": "gaussian", "n": 100},
        "samples": 40000,
        "seed": 1
    }"#;
    let out = run(&dir, "width", cfg, "width.json", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(dir.join("width.json"));
    let mean = report["mean"].as_f64().unwrap();
    let se = report["std_error"].as_f64().unwrap();
    assert!((mean - 9.975_031_64).abs() <= 3.0 * se, "{mean} +- {se}");
    assert!((report["analytic"].as_f64().unwrap() - 9.975_031_64).abs() < 1e-6);
    assert_eq!(report["kind"], "scaled_width");
    assert_eq!(report["n_samples"], 40000);

    let meta = read_json(dir.join("width.meta.json"));
    assert_eq!(meta["command"], "width");
    assert_eq!(meta["seed"], 1);
    assert_eq!(meta["config"]["trick_set"]["kind"], "norm_threshold");
    assert_eq!(meta["config"]["trick_set"]["rho0"], 1.0);
    assert!(meta["started_unix_ms"].as_u64().unwrap() <= meta["finished_unix_ms"].as_u64().unwrap());
}

#[test]
fn sweep_is_reproducible_across_runs_and_workers() {
    let dir = workdir("sweep");
    let a = run(&dir, "sweep", SWEEP, "a.csv", &["--workers", "1"]);
    let b = run(&dir, "sweep", SWEEP, "b.csv", &["--workers", "4"]);
    let c = run(&dir, "sweep", SWEEP, "c.csv", &["--workers", "8"]);
    for o in [&a, &b, &c] {
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = fs::read(dir.join("a.csv")).unwrap();
    assert_eq!(csv, fs::read(dir.join("b.csv")).unwrap());
    assert_eq!(csv, fs::read(dir.join("c.csv")).unwrap());
    for curve in ["fpr", "fnr", "success_rate"] {
        let x = fs::read(dir.join(format!("a.{curve}.dat"))).unwrap();
        assert_eq!(x, fs::read(dir.join(format!("c.{curve}.dat"))).unwrap());
    }
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,fpr,fnr,success_rate,fpr_se,fnr_se,success_se"));
    assert_eq!(lines.count(), 8);

    let meta = read_json(dir.join("b.meta.json"));
    assert_eq!(meta["workers"], 4);
    assert_eq!(meta["config"]["u"], 4.0);
    assert_eq!(meta["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn seed_flag_and_worker_env_are_honoured() {
    let dir = workdir("seed");
    let base = run(&dir, "sweep", SWEEP, "base.csv", &[]);
    assert!(base.status.success());
    let other = run(&dir, "sweep", SWEEP, "other.csv", &["--seed", "6"]);
    assert!(other.status.success());
    assert_ne!(fs::read(dir.join("base.csv")).unwrap(), fs::read(dir.join("other.csv")).unwrap());
    assert_eq!(read_json(dir.join("other.meta.json"))["seed"], 6);
    assert_eq!(read_json(dir.join("other.meta.json"))["config"]["seed"], 6);

    let cfg = dir.join("env.config.json");
    fs::write(&cfg, SWEEP).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fakewidth"))
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("env.csv"))
        .env("FAKEWIDTH_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read_json(dir.join("env.meta.json"))["workers"], 3);
    assert_eq!(fs::read(dir.join("base.csv")).unwrap(), fs::read(dir.join("env.csv")).unwrap());
}

#[test]
fn radius_brackets_the_norm_threshold_set() {
    let dir = workdir("radius");
    let cfg = r#"{
        "trick_set": {"kind": "norm_threshold", "n": 16},
        "distribution": {"kind": "gaussian", "n": 16},
        "radii": {"min": 0.5, "max": 30, "count": 30},
        "trials": 4000,
        "seed": 2
    }"#;
    let out = run(&dir, "radius", cfg, "radius.json", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = read_json(dir.join("radius.json"));
    let (lo, hi) = (b["r_lower"].as_f64().unwrap(), b["r_upper"].as_f64().unwrap());
    assert!(lo <= hi && lo <= 7.88 && 7.88 <= hi, "[{lo}, {hi}]");
    assert!(b["battery"].as_array().unwrap().iter().any(|f| f == "norm_ball"));
}

#[test]
fn radius_without_a_wide_grid_fails_with_diagnostics() {
    let dir = workdir("radius_fail");
    let cfg = r#"{
        "trick_set": {"kind": "half_coordinate", "n": 100},
        "distribution": {"kind": "gaussian", "n": 100},
        "radii": {"min": 0.5, "max": 5, "count": 6},
        "trials": 1000,
        "seed": 3
    }"#;
    let out = run(&dir, "radius", cfg, "radius.json", &[]);
    assert_eq!(out.status.code(), Some(4));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "bracket");
    assert_eq!(rec["exit_code"], 4);
    assert!(rec["message"].as_str().unwrap().contains("grid evaluations"));
    assert!(!dir.join("radius.json").exists());
}

#[test]
fn malformed_configs_exit_with_code_2() {
    let dir = workdir("parse");
    for (k, cfg) in [
        "{ not json",
        r#"{"trick_set": {"kind": "norm_threshold", "n": 4}, "distribution": {"kind": "gaussian", "n": 4}, "seed": 1, "bogus": 1}"#,
        r#"{"trick_set": {"kind": "sparse_norm", "n": 4, "s": 9}, "distribution": {"kind": "gaussian", "n": 4}, "seed": 1}"#,
    ]
    .iter()
    .enumerate()
    {
        let out = run(&dir, "width", cfg, &format!("w{k}.json"), &[]);
        assert_eq!(out.status.code(), Some(2), "config {k}");
        assert_eq!(error_record(&out)["error"], "config");
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_fakewidth"))
        .args(["width", "--config", "/nonexistent/config.json", "--out"])
        .arg(dir.join("x.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn precondition_violations_exit_with_code_3() {
    let dir = workdir("precondition");
    let few_trials = SWEEP.replace("2000", "50");
    let out = run(&dir, "sweep", &few_trials, "few.csv", &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"], "precondition");

    let coin_flip = r#"{
        "trick_set": {"kind": "norm_threshold", "n": 64},
        "distribution": {"kind": "gaussian", "n": 64},
        "r": 15.96,
        "trials": 2000,
        "seed": 4
    }"#;
    let out = run(&dir, "invariance", coin_flip, "inv.json", &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("success probability"));
}

#[test]
fn invariance_reports_exact_pushforward() {
    let dir = workdir("invariance");
    let cfg = r#"{
        "trick_set": {"kind": "sparse_norm", "n": 8, "s": 2},
        "distribution": {"kind": "rademacher", "n": 8},
        "r": 1,
        "seed": 4
    }"#;
    let out = run(&dir, "invariance", cfg, "inv.json", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = read_json(dir.join("inv.json"));
    assert_eq!(rep["mode"], "exact");
    assert_eq!(rep["atoms"], 256);
    assert_eq!(rep["max_pmf_discrepancy"], 0.0);
}

#[test]
fn focused_picks_the_coordinate_pair() {
    let dir = workdir("focused");
    let mut e1 = vec![0.0; 100];
    e1[0] = 2.0;
    let neg: Vec<f64> = e1.iter().map(|v| -v).collect();
    let cfg = serde_json::json!({
        "trick_set": {"kind": "half_coordinate", "n": 100},
        "distribution": {"kind": "gaussian", "n": 100},
        "candidates": ["trick_set", {"points": [e1, neg]}],
        "samples": 20000,
        "seed": 9
    })
    .to_string();
    let out = run(&dir, "focused", &cfg, "focused.json", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = read_json(dir.join("focused.json"));
    assert_eq!(rep["chosen"], 1);
    let mean = rep["estimate"]["mean"].as_f64().unwrap();
    let se = rep["estimate"]["std_error"].as_f64().unwrap();
    assert!((mean - 1.595_769_1).abs() <= 3.0 * se, "{mean}");
}
