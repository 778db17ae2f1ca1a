//! End-to-end checks of the `topodyn` binary: exit codes, artifact layout,
//! and determinism of the written files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topodyn"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited with a code")
}

/// A two-agent run that converges well before the horizon.
const CONVERGING: &str = r#"{
    "model": "topological",
    "k": 1,
    "init": { "explicit": [0.0, 1.0] },
    "sim": { "t_max": 15.0 },
    "outputs": ["trajectory", "events", "summary", "plot"]
}"#;

#[test]
fn simulate_converged_run_exits_zero_and_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, CONVERGING);

    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    for name in ["trajectory.csv", "events.jsonl", "summary.json", "plot.svg"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let svg = fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"), "plot.svg is not an SVG document");

    // stdout carries the same summary that was written to disk
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let disk: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(stdout, disk);
    assert_eq!(stdout["status"], "converged");
}

#[test]
fn simulate_is_deterministic_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg_text = r#"{
        "model": "topological",
        "k": 2,
        "init": { "random": { "count": 8, "seed": 42 } },
        "sim": { "t_max": 30.0 }
    }"#;
    for dir in [&a, &b] {
        let cfg = dir.path().join("run.json");
        write(&cfg, cfg_text);
        let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
        assert!(out.status.success() || code(&out) == 2);
    }
    let ta = fs::read(a.path().join("trajectory.csv")).unwrap();
    let tb = fs::read(b.path().join("trajectory.csv")).unwrap();
    assert_eq!(ta, tb, "identical configs must produce byte-identical trajectories");
}

#[test]
fn simulate_horizon_reached_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    write(
        &cfg,
        r#"{
            "model": "topological",
            "k": 1,
            "init": { "explicit": [0.0, 1.0] },
            "sim": { "t_max": 0.5 }
        }"#,
    );
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_config_exits_one_with_error_message() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, r#"{ "model": "topological", "k": 1, "init": { "explicit": [0.0, 1.0] }, "typo": 1 }"#);
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let missing = bin()
        .args(["simulate", "--config"])
        .arg(dir.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(code(&missing), 1);
}

#[test]
fn out_dir_env_var_is_used_when_flag_is_absent() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, CONVERGING);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .env("TOPODYN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn analyze_reports_class_and_stability() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.json");
    write(&state, r#"{ "k": 2, "opinions": [0.0, 0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0] }"#);
    let out = bin().args(["analyze", "--state"]).arg(&state).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["kind"], "clusterization");
    assert_eq!(doc["structurally_stable"], true);
    assert_eq!(doc["removal_stable"], true);
}

#[test]
fn experiment_writes_report() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("scenario.json");
    write(
        &scenario,
        r#"{
            "name": "newcomer between two groups",
            "model": { "contrast": { "d": 1.0 } },
            "k": 2,
            "initial": [0.0, 0.0, 0.0, 1.5, 1.5, 1.5],
            "action": { "add": { "opinion": 0.75 } },
            "sim": { "t_max": 30.0 }
        }"#,
    );
    let out = bin().args(["experiment", "--scenario"]).arg(&scenario).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("report.json").exists());
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(doc["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn plot_renders_trajectory_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, CONVERGING);
    let sim = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&sim), 0);

    let svg_path = dir.path().join("replot.svg");
    let out = bin()
        .args(["plot", "--trajectory"])
        .arg(dir.path().join("trajectory.csv"))
        .arg("--events")
        .arg(dir.path().join("events.jsonl"))
        .arg("--out")
        .arg(&svg_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&svg_path).unwrap().starts_with("<svg"));
}
