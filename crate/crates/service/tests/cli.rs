use std::path::Path;
use std::process::{Command, Output};

fn telewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_telewalk")).args(args).output().unwrap()
}

fn scenario() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/four_gate_hall.json")
        .to_string_lossy()
        .into_owned()
}

fn single_json_error(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert!(v["error"].is_string());
    v
}

#[test]
fn malformed_scenario_fails_with_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"walls": "nope"}"#).unwrap();
    let out = telewalk(&["run", "--scenario", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    single_json_error(&out);
    let missing = telewalk(&["replay", "--log", dir.path().join("absent").to_str().unwrap()]);
    single_json_error(&missing);
    let usage = telewalk(&["run", "--bogus"]);
    assert_eq!(single_json_error(&usage)["kind"], "usage");
}

#[test]
fn run_twice_gives_identical_csv_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario();
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = telewalk(&["run", "--scenario", &sc, "--peds", "30", "--seed", "7", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push(std::fs::read(out_dir.join("trajectory.csv")).unwrap());
    }
    assert!(!csvs[0].is_empty());
    assert_eq!(csvs[0], csvs[1]);
    let replayed = telewalk(&["replay", "--log", dir.path().join("a").to_str().unwrap()]);
    assert!(replayed.status.success());
}

#[test]
fn scripted_run_replays_and_renders() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("session");
    let out = telewalk(&[
        "run", "--scenario", &scenario(), "--peds", "20", "--seed", "3", "--out", log.to_str().unwrap(),
        "--scripted", "goal=18,6", "speed=1.2", "--max-samples", "250", "--keep-walking",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["samples"], 250);
    let replayed = telewalk(&["replay", "--log", log.to_str().unwrap()]);
    assert!(replayed.status.success());
    let v: serde_json::Value = serde_json::from_slice(&replayed.stdout).unwrap();
    assert_eq!(v["mismatches"], 0);
    let fig = dir.path().join("fig.svg");
    let svg = telewalk(&["export-svg", "--log", log.to_str().unwrap(), "--out", fig.to_str().unwrap()]);
    assert!(svg.status.success());
    assert!(std::fs::read_to_string(fig).unwrap().contains("id=\"participant\""));
}

#[test]
fn bad_scripted_option_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = telewalk(&[
        "run", "--scenario", &scenario(), "--out", dir.path().to_str().unwrap(), "--scripted", "goal=1",
    ]);
    single_json_error(&out);
}

#[test]
fn calibrate_with_synthetic_runner() {
    let dir = tempfile::tempdir().unwrap();
    let observed = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/observed_example.json");
    let out = telewalk(&[
        "calibrate", "--scenario", &scenario(), "--observed", observed.to_str().unwrap(), "--scheme", "smooth",
        "--w", "0.5", "--runner", "synthetic", "--grid", "default", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().next().unwrap().starts_with("iter   1"));
    assert!(stdout.contains("converged after"));
    for f in ["iterations.csv", "calibration.json", "deviation.json", "fit.json", "grid.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["table"].as_array().unwrap().len(), 20);
    let bad = telewalk(&[
        "calibrate", "--scenario", &scenario(), "--scheme", "bogus", "--out", dir.path().to_str().unwrap(),
    ]);
    single_json_error(&bad);
}
