//! End-to-end checks of the binary: artifact layout, exit codes, and
//! run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lmsr-market"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn simulate_with_zero_agents_emits_constant_prices() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"{
        "schema_version": 1,
        "seed": 3,
        "kind": "simulate",
        "params": { "t_end": 50.0, "epsilon": 0.1, "record_stride": 10, "convergence_window": 10.0 }
    }"#;
    std::fs::write(tmp.path().join("config.json"), config).unwrap();
    let out = run_in(
        tmp.path(),
        &["simulate", "--config", "config.json", "--out", "run1"],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = read(&tmp.path().join("run1"), "trajectory.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,p_0,p_1");
    for line in lines {
        let p1: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(p1, 0.5);
    }
    let manifest = read(&tmp.path().join("run1"), "manifest.json");
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["kind"], "simulate");
    assert_eq!(parsed["seed"], 3);
    assert!(parsed["outputs"].as_array().unwrap().len() >= 2);
    assert!(tmp.path().join("run1/trajectory.gp").exists());
}

#[test]
fn schema_violations_exit_two() {
    let tmp = tempfile::tempdir().unwrap();

    // unparseable kind
    std::fs::write(
        tmp.path().join("bad.json"),
        r#"{"schema_version":1,"kind":"nope","params":{}}"#,
    )
    .unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["exit_code"], 2);

    // kind does not match the subcommand
    std::fs::write(
        tmp.path().join("mismatch.json"),
        r#"{"schema_version":1,"kind":"lag_sweep","params":{}}"#,
    )
    .unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", "mismatch.json"]);
    assert_eq!(out.status.code(), Some(2));

    // out-of-range parameter
    std::fs::write(
        tmp.path().join("range.json"),
        r#"{"schema_version":1,"kind":"simulate","params":{"beta":-1.0}}"#,
    )
    .unwrap();
    let out = run_in(tmp.path(), &["simulate", "--config", "range.json"]);
    assert_eq!(out.status.code(), Some(2));

    // missing file
    let out = run_in(tmp.path(), &["simulate", "--config", "absent.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integration_faults_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    // an astronomically large initial condition overflows the trace within
    // a few steps
    let config = r#"{
        "schema_version": 1,
        "kind": "lorenz_demo",
        "params": { "t_end": 50.0, "ic_a": [1e200, -1.0, 1.0] }
    }"#;
    std::fs::write(tmp.path().join("blowup.json"), config).unwrap();
    let out = run_in(
        tmp.path(),
        &["lorenz", "--config", "blowup.json", "--out", "x"],
    );
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["exit_code"], 3);
    assert!(err["error"].as_str().unwrap().contains("step"));
}

#[test]
fn lag_sweep_grid_is_complete_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"{
        "schema_version": 1,
        "seed": 5,
        "kind": "lag_sweep",
        "params": {
            "alphas": [1.0, 6.0],
            "nus": [-1, 0, 1],
            "replications": 2,
            "agents_per_class": 6,
            "t_end": 25000.0,
            "record_stride": 100
        }
    }"#;
    std::fs::write(tmp.path().join("sweep.json"), config).unwrap();

    let out = run_in(
        tmp.path(),
        &[
            "lag-sweep",
            "--config",
            "sweep.json",
            "--out",
            "a",
            "--quiet",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv_a = read(&tmp.path().join("a"), "sweep.csv");
    assert_eq!(csv_a.lines().count(), 7); // header + 2 alphas x 3 nus
    assert_eq!(
        csv_a.lines().next().unwrap(),
        "alpha,nu,mean_ratio,ci_halfwidth,n_reps"
    );

    // identical config and seed: bit-identical table, even single threaded
    let out = run_in(
        tmp.path(),
        &[
            "lag-sweep",
            "--config",
            "sweep.json",
            "--out",
            "b",
            "--threads",
            "1",
            "--quiet",
        ],
    );
    assert!(out.status.success());
    let csv_b = read(&tmp.path().join("b"), "sweep.csv");
    assert_eq!(csv_a, csv_b);

    // seed override changes the draw
    let out = run_in(
        tmp.path(),
        &[
            "lag-sweep",
            "--config",
            "sweep.json",
            "--out",
            "c",
            "--seed",
            "99",
            "--quiet",
        ],
    );
    assert!(out.status.success());
    let csv_c = read(&tmp.path().join("c"), "sweep.csv");
    assert_ne!(csv_a, csv_c);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("c"), "manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 99);
}

#[test]
fn multi_mc_reports_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"{
        "schema_version": 1,
        "seed": 8,
        "kind": "multi_asset_mc",
        "params": { "instances": 10, "t_end": 1500.0 }
    }"#;
    std::fs::write(tmp.path().join("mc.json"), config).unwrap();
    let out = run_in(
        tmp.path(),
        &["multi-mc", "--config", "mc.json", "--out", "mc", "--quiet"],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = read(&tmp.path().join("mc"), "instances.csv");
    assert_eq!(csv.lines().count(), 11);
    assert!(csv
        .lines()
        .next()
        .unwrap()
        .starts_with("instance,c_0,c_1,c_2,kind"));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("mc"), "manifest.json")).unwrap();
    assert!(manifest["summary"]["kind_counts"].is_object());
    assert_eq!(manifest["summary"]["oscillating"], 0);
    assert!(manifest["conventions"]["oscillation_detector"].is_string());
}

#[test]
fn track_dumps_agents() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"{
        "schema_version": 1,
        "seed": 2,
        "kind": "interval_tracking",
        "params": { "agents_per_class": 4, "t_end": 5000.0, "record_stride": 100 }
    }"#;
    std::fs::write(tmp.path().join("track.json"), config).unwrap();
    let out = run_in(
        tmp.path(),
        &["track", "--config", "track.json", "--out", "tr", "--quiet"],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let agents: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("tr"), "agents.json")).unwrap();
    let list = agents.as_array().unwrap();
    assert_eq!(list.len(), 8);
    assert!(list.iter().all(|a| a["kind"] == "interval"));
    let csv = read(&tmp.path().join("tr"), "trajectory.csv");
    assert!(csv.lines().next().unwrap().contains("N"));
    assert!(csv.lines().next().unwrap().contains("x_0"));
}

#[test]
fn validate_passes_and_prints_table() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"{
        "schema_version": 1,
        "seed": 12,
        "kind": "constant_info_suite",
        "params": { "instances": 20, "t_end": 3000.0 }
    }"#;
    std::fs::write(tmp.path().join("suite.json"), config).unwrap();
    let out = run_in(
        tmp.path(),
        &["validate", "--config", "suite.json", "--out", "val"],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("simplex"));
    assert!(stdout.contains("sliding_mode_pinning"));
    assert!(stdout.contains("suite_convergence"));
    assert!(!stdout.contains("FAIL"));
    assert!(tmp.path().join("val/constant_info.csv").exists());
}
