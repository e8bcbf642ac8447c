use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_coop2mac");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("COOP2MAC_THREADS", "2")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn constants_command() {
    let out = run(&["constants"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((f(&v["v1"]) - 2.0182).abs() <= 5e-3);
    assert!((f(&v["v2"]) - 2.0182).abs() <= 5e-3);
    assert!((f(&v["v12"]) - 3.8218).abs() <= 5e-3);
    assert_eq!(v["detail"]["v12"]["argmax"].as_array().unwrap().len(), 4);
}

#[test]
fn region_reference_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "region",
        "--mode",
        "fd",
        "--hmax-sq",
        "100",
        "--hmin-sq",
        "4",
        "--h1-sq",
        "25",
        "--h2-sq",
        "10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v.get("hd").is_none());
    let outer = &v["fd"]["outer"]["vertices"];
    let r2_max = outer
        .as_array()
        .unwrap()
        .iter()
        .map(|p| f(&p[1]))
        .fold(0.0, f64::max);
    let r1_max = outer
        .as_array()
        .unwrap()
        .iter()
        .map(|p| f(&p[0]))
        .fold(0.0, f64::max);
    assert!((r2_max - 4.9069).abs() < 1e-4);
    assert!((r1_max - 7.1799).abs() < 1e-4);
    let inner: Vec<(f64, f64)> = v["fd"]["inner"]["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (f(&p[0]), f(&p[1])))
        .collect();
    assert!(inner
        .iter()
        .any(|(a, b)| (a - 2.1997).abs() < 1e-4 && (b - 3.5146).abs() < 1e-4));
    assert_eq!(v["fd"]["report"]["regime"], "Regime3");

    let csv = std::fs::read_to_string(dir.path().join("fd_outer.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "r1_bits,r2_bits");
    assert!(dir.path().join("region.json").exists());
}

#[test]
fn region_from_exponents() {
    let out = run(&[
        "region", "--mode", "hd", "--snr-db", "30", "--bmax", "2", "--bmin", "0.5", "--b1", "1.5",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v.get("fd").is_none());
    assert!(f(&v["hd"]["report"]["gap"]) <= 4.8219);
}

#[test]
fn lda_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let out = run(&[
        "lda",
        "--bmax",
        "4",
        "--bmin",
        "1",
        "--b1",
        "3",
        "--slots",
        "100",
        "--seed",
        "7",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["steady_state"], serde_json::json!([1.0, 3.0]));
    assert_eq!(v["errors"], 0);
    let text = std::fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn gap_sweep_fd_certification() {
    let out = run(&[
        "gap-sweep",
        "--mode",
        "fd",
        "--bmax",
        "0:3",
        "--bmin",
        "0:3",
        "--b1",
        "0:3",
        "--b2",
        "0:3",
        "--snr-db",
        "10,30,60",
        "--count",
        "10000",
        "--seed",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["violation_count"], 0);
    assert!(f(&v["fd"]["max_gap"]) <= 2.0);
    assert!(v["hd"].is_null());
}

#[test]
fn gap_sweep_hd_grid() {
    let dir = tempfile::tempdir().unwrap();
    let rows = dir.path().join("rows.csv");
    let out = run(&[
        "gap-sweep",
        "--mode",
        "hd",
        "--sampling",
        "grid",
        "--bmax",
        "2",
        "--bmin",
        "0.5",
        "--b1",
        "0:3",
        "--b2",
        "0",
        "--snr-db",
        "40",
        "--rows",
        rows.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["samples"], 7);
    assert!(f(&v["hd"]["max_gap"]) <= 4.8219);
    let text = std::fs::read_to_string(&rows).unwrap();
    assert!(text.starts_with("idx,snr_db,bmax,bmin,b1,b2,mode,regime,gap_bits,"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn gap_sweep_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    let summary = dir.path().join("summary.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "both", "count": 25, "seed": 4, "snr_db": [20]}"#,
    )
    .unwrap();
    let out = run(&[
        "gap-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--count",
        "30",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["samples"], 30);
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(on_disk, v);
}

#[test]
fn gdof_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gdof.csv");
    let out = run(&[
        "gdof",
        "--bmax",
        "2",
        "--bmin",
        "0.5",
        "--b1",
        "1.5",
        "--mode",
        "fd",
        "--snr-db",
        "60,120",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["corners"]["V3"], serde_json::json!([0.5, 1.5]));
    assert_eq!(v["trajectory"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("snr_db,region,vertex,r1,r2"));
}

#[test]
fn audit_small() {
    let out = run(&["audit", "--channels", "50", "--chain-draws", "500"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["lda", "--bmax", "x", "--bmin", "1", "--b1", "2"])
            .status
            .code(),
        Some(2)
    );
    // equal widths violate the scheme precondition
    assert_eq!(
        run(&["lda", "--bmax", "4", "--bmin", "2", "--b1", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["gap-sweep", "--bmax", "0:9"]).status.code(), Some(2));
    assert_eq!(run(&["gap-sweep", "--count", "0"]).status.code(), Some(2));
    assert_eq!(run(&["gap-sweep", "--snr-db", "-3"]).status.code(), Some(2));
    assert_eq!(run(&["region", "--hmax-sq", "100"]).status.code(), Some(2));
    assert_eq!(
        run(&["gdof", "--bmax", "1", "--bmin", "2", "--b1", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_thread_env() {
    let out = Command::new(BIN)
        .arg("constants")
        .env("COOP2MAC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
