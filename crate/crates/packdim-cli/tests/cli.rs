use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn packdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_packdim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn experiments() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../experiments"))
}

#[test]
fn predict_reports_all_bounds() {
    let o = packdim(&["predict", "--alpha", "0.5", "--d", "1", "--beta", "0.5"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["image"], 1.0);
    assert_eq!(v["graph_upper"], 1.0);
    assert_eq!(v["graph_lower"], 0.75);
    assert!((v["gh"]["x_star"].as_f64().unwrap() - 8.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn predict_omits_bounds_above_critical_dimension() {
    let o = packdim(&["predict", "--alpha", "0.5", "--d", "2", "--beta", "1"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["image"], 2.0);
    assert!(v.get("tx_lower").is_none());
}

#[test]
fn invalid_regime_is_an_error() {
    let o = packdim(&["predict", "--alpha", "1.5", "--d", "1", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn txset_table() {
    let o = packdim(&["txset", "--beta", "0.5", "--levels", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# packdim "));
    assert_eq!(lines[1], "k,log_inv_delta,log_inv_eta,log_m,ratio_at_eta,ratio_at_delta");
    assert_eq!(lines.len(), 5);
    assert!(lines[2].starts_with("1,"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = packdim(&[
            "--seed", "17", "--out", p.to_str().unwrap(), "simulate", "--alpha", "0.4", "--d", "2", "--points", "64",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().nth(1), Some("t1,x1,x2"));
    assert_eq!(text.lines().count(), 66);
    let sidecar: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"]["master"], 17);
    assert_eq!(sidecar["drift"]["kind"], "zero");
}

#[test]
fn simulate_with_drift_shifts_values() {
    let base = packdim(&["simulate", "--alpha", "0.5", "--points", "8"]);
    let moved = packdim(&["simulate", "--alpha", "0.5", "--points", "8", "--drift", r#"{"kind":"constant","c":[2.0]}"#]);
    let value = |o: &Output, row: usize| -> f64 {
        stdout(o).lines().nth(row + 2).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert_eq!(value(&moved, 3), value(&base, 3) + 2.0);
    let bad = packdim(&["simulate", "--alpha", "0.5", "--drift", "{"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn write_cantor_csv(path: &Path) {
    // middle-thirds Cantor set at level 6
    let mut pts = vec![0.0f64];
    let mut len = 1.0;
    for _ in 0..6 {
        len /= 3.0;
        pts = pts.iter().flat_map(|&p| [p, p + 2.0 * len]).collect();
    }
    let mut text = String::from("x1,weight\n");
    for p in &pts {
        text += &format!("{p},{}\n", 1.0 / pts.len() as f64);
    }
    fs::write(path, text).unwrap();
}

#[test]
fn dim_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("mu.csv");
    write_cantor_csv(&m);
    let out = dir.path().join("dim.csv");
    let o = packdim(&[
        "--out", out.to_str().unwrap(), "dim", "--measure", m.to_str().unwrap(), "--j-min", "1", "--j-max", "6",
        "--method", "regression",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().nth(1), Some("atom,scale,V,ratio"));
    assert_eq!(text.lines().count(), 2 + 64 * 6);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("dim.csv.json")).unwrap()).unwrap();
    assert_eq!(summary["guard_status"], "ok");
    assert_eq!(summary["method"], "regression");
    let est = summary["estimate"].as_f64().unwrap();
    assert!((est - 2f64.ln() / 3f64.ln()).abs() < 0.15, "{est}");
}

#[test]
fn dim_guard_violation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("mu.csv");
    write_cantor_csv(&m);
    let o = packdim(&["--format", "json", "dim", "--measure", m.to_str().unwrap(), "--j-min", "2", "--j-max", "12"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["guard_status"].as_str().unwrap().contains("resolution"));
    assert!(v["estimate"].is_null());
}

#[test]
fn profile_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("mu.csv");
    write_cantor_csv(&m);
    let o = packdim(&[
        "--format", "json", "profile", "--measure", m.to_str().unwrap(), "--beta", "0.25", "--j-min", "1", "--j-max",
        "6", "--method", "regression",
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["estimate"].as_f64().unwrap() <= 0.3);
}

#[test]
fn verify_checks_pass_and_report() {
    let o = packdim(&["--format", "json", "verify", "kernel-chain", "doubling", "--trials", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let reports: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["name"], "kernel_chain");
    assert_eq!(reports[1]["trials"], 50);
    assert!(reports.iter().all(|r| r["violations"] == 0));
}

#[test]
fn verify_eq_ar_csv() {
    let o = packdim(&["verify", "eq-ar", "--beta", "0.4,0.6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1), Some("name,trials,violations,worst_ratio,pass"));
    assert_eq!(text.lines().filter(|l| l.starts_with("eq_ar,")).count(), 2);
}

#[test]
fn experiment_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = experiments().join("cantor_image.json");
    let o = packdim(&["--out", dir.path().to_str().unwrap(), "experiment", "run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["predicted"], 0.5);
    let json = fs::read_to_string(dir.path().join("cantor_image.json")).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&json).unwrap(), report);
    let kernel = fs::read_to_string(dir.path().join("cantor_image_kernel.csv")).unwrap();
    assert!(kernel.starts_with(&format!("# packdim {} config ", env!("CARGO_PKG_VERSION"))));
}

#[test]
fn experiment_suite_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("configs");
    fs::create_dir(&cfgs).unwrap();
    let empty = packdim(&["experiment", "suite", cfgs.to_str().unwrap()]);
    assert_eq!(empty.status.code(), Some(2));

    fs::copy(experiments().join("cantor_image.json"), cfgs.join("cantor_image.json")).unwrap();
    let broken = r#"{"name":"broken","regime":{"alpha":0.5,"d":1},"set":{"kind":"cantor","branches":2,"ratio":0.7},
        "resolution":4,"grid":{"j_min":1,"j_max":5},"replicas":0,"seed":1,"mode":"image",
        "box_estimate":false,"box_tolerance":0.1,"kernel_tolerance":0.1}"#;
    fs::write(cfgs.join("broken.json"), broken).unwrap();
    let out = dir.path().join("out");
    let o = packdim(&["--out", out.to_str().unwrap(), "experiment", "suite", cfgs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("broken,") && rows[0].ends_with(",false"));
    assert!(rows[1].starts_with("cantor_image,") && rows[1].ends_with(",true"));
}
