//! End-to-end tests of the binary: artifacts, exit codes, CSV fidelity.

use std::path::Path;
use std::process::Command;

use evcon_cli::config::ScenarioFile;
use evcon_cli::output::{events_csv, parse_trajectory_csv, trajectory_csv};
use evcon_core::run;

fn evcon() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evcon"))
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = evcon()
        .args([
            "run",
            "--scenario",
            "benchmark",
            "--horizon",
            "0.1",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "trajectory.csv",
        "events.csv",
        "metrics.txt",
        "summary.json",
        "outputs.svg",
        "tracking_errors.svg",
        "intervals_follower_1.svg",
        "intervals_follower_2.svg",
        "intervals_follower_3.svg",
        "intervals_follower_4.svg",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["strategy"], "fixed");
    assert_eq!(summary["agents"].as_array().unwrap().len(), 4);
}

#[test]
fn strategy_override_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let out = evcon()
        .args([
            "run",
            "--scenario",
            "benchmark",
            "--strategy",
            "periodic",
            "--horizon",
            "0.05",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    // Header plus the initialization event plus one event per step, per agent.
    let rows = events.lines().count() - 1;
    assert_eq!(rows, 4 * 51);
    assert!(events.lines().nth(1).unwrap().contains("periodic"));
}

#[test]
fn invalid_scenario_path_exits_with_config_error() {
    let out = evcon()
        .args(["run", "--scenario", "/nonexistent/scenario.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_trigger_parameters_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = evcon_cli::config::BENCHMARK_PRESET.replace("pi_bar = 4.0", "pi_bar = 2.0");
    std::fs::write(&path, text).unwrap();
    let out = evcon().args(["run", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pi_bar"));
}

#[test]
fn divergent_scenario_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("divergent.toml");
    let text = evcon_cli::config::BENCHMARK_PRESET
        .replace(
            "[plant]\nkind = \"benchmark\"",
            "[plant]\nkind = \"custom\"\ndrift = [\"0\", \"x1^3*1e6\"]\ndisturbance = [\"0\", \"0\"]",
        )
        .replace("r = [-100.0, -100.0]", "r = [100.0, 100.0]")
        .replace("t_end = 5.0", "t_end = 2.0");
    std::fs::write(&path, text).unwrap();
    let out = evcon()
        .args(["run", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn diagnose_exit_codes() {
    let ok = evcon()
        .args(["diagnose", "--scenario", "benchmark"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("all passed"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad_q.toml");
    let text =
        evcon_cli::config::BENCHMARK_PRESET.replace("q = [350.0, 0.5]", "q = [-1.0, 1.0]");
    std::fs::write(&path, text).unwrap();
    let out = evcon().args(["diagnose", "--scenario"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn compare_emits_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = evcon()
        .args([
            "compare",
            "--scenario",
            "benchmark",
            "--horizon",
            "0.05",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("comparison.txt")).unwrap();
    assert!(table.contains("follower 1"));
    assert!(table.contains("fixed"));
    assert!(table.contains("sample-data baseline"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap())
            .unwrap();
    assert_eq!(json["entries"].as_array().unwrap().len(), 4);
}

#[test]
fn trajectory_csv_round_trips_exactly() {
    let file = ScenarioFile::benchmark();
    let mut scenario = file.build().unwrap();
    scenario.t_end = 0.05;
    let (log, _) = run(&scenario).unwrap();
    let text = trajectory_csv(&log, scenario.plant.order());
    let (header, rows) = parse_trajectory_csv(&text).unwrap();
    // time + 4 agents x (4 groups x 2 levels + u + w + theta + 2 norms).
    assert_eq!(header.len(), 1 + 4 * (4 * 2 + 3 + 2));
    assert_eq!(header[1], "x_1_1");
    assert_eq!(rows.len(), log.times.len());
    for (idx, row) in rows.iter().enumerate() {
        assert_eq!(row[0].to_bits(), log.times[idx].to_bits());
        // Spot-check a scattering of columns for bit equality.
        assert_eq!(row[1].to_bits(), log.agents[0].x[0][idx].to_bits());
        let u1_col = 1 + 4 * 2;
        assert_eq!(row[u1_col].to_bits(), log.agents[0].u[idx].to_bits());
        let last = row.len() - 1;
        assert_eq!(
            row[last].to_bits(),
            log.agents[3].w_norm[1][idx].to_bits()
        );
    }
    // Events round-trip through their own format.
    let events = events_csv(&log);
    for (line, event) in events.lines().skip(1).zip(&log.events) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<f64>().unwrap().to_bits(), event.time.to_bits());
        assert_eq!(fields[1].parse::<usize>().unwrap(), event.agent + 1);
        assert_eq!(fields[3].parse::<f64>().unwrap().to_bits(), event.u.to_bits());
    }
}

#[test]
fn scenario_file_loads_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path: &Path = &dir.path().join("scenario.toml");
    std::fs::write(path, evcon_cli::config::BENCHMARK_PRESET).unwrap();
    let file = ScenarioFile::load(path).unwrap();
    assert!(file.build().is_ok());
}
