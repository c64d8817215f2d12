use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sqrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqrs"))
        .args(args)
        .output()
        .unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).expect("stderr is JSON")
}

fn sized(dir: &Path, pulses: u64) -> Vec<String> {
    vec![
        "--preset".into(),
        "ideal".into(),
        "--phases".into(),
        "0.5,2.0,4.0".into(),
        "--pulses".into(),
        pulses.to_string(),
        "--calibration-pulses".into(),
        "500".into(),
        "--out".into(),
        dir.to_str().unwrap().into(),
    ]
}

fn small(dir: &Path) -> Vec<String> {
    sized(dir, 3000)
}

fn with<'a>(base: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter()
        .map(String::as_str)
        .chain(extra.iter().copied())
        .collect()
}

#[test]
fn config_prints_overridden_toml() {
    let out = sqrs(&["--seed", "99", "--phases", "0.1,-0.2", "config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(cfg["seed"].as_integer(), Some(99));
    assert_eq!(cfg["phases"].as_array().unwrap().len(), 2);
    assert!(cfg.get("channel").is_some());
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let first = sqrs(&["--preset", "field-50km", "--pulses", "1234", "config"]);
    let path = dir.path().join("exp.toml");
    fs::write(&path, &first.stdout).unwrap();
    let second = sqrs(&["--config", path.to_str().unwrap(), "config"]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn simulate_writes_files_and_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let args = small(dir);
        let out = sqrs(&with(&args, &["simulate"]));
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["files"].as_array().unwrap().len(), 6);
    }
    for name in [
        "counts_00.json",
        "counts_02.json",
        "calibration.json",
        "eve_view.jsonl",
        "alice_view.jsonl",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn attack_changes_the_logs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(sqrs(&with(&small(a.path()), &["simulate"]))
        .status
        .success());
    assert!(sqrs(&with(&small(b.path()), &["simulate", "--attack"]))
        .status
        .success());
    let clean = fs::read_to_string(a.path().join("counts_00.json")).unwrap();
    let hit = fs::read_to_string(b.path().join("counts_00.json")).unwrap();
    assert_ne!(clean, hit);
}

#[test]
fn reproduce_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let out = sqrs(&with(&small(dir), &["reproduce", "--figure", "fig4"]));
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let x = fs::read(a.path().join("fig4.csv")).unwrap();
    assert_eq!(x, fs::read(b.path().join("fig4.csv")).unwrap());
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), 4);
}

#[test]
fn qber_reports_both_links() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqrs(&with(&sized(dir.path(), 40_000), &["qber"]));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["threshold"], 0.06);
    assert_eq!(v["clean"]["qber"], 0.0);
    assert_eq!(v["clean"]["pass"], true);
    assert_eq!(v["attacked"]["pass"], false);
}

#[test]
fn unknown_figure_is_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqrs(&with(
        &small(dir.path()),
        &["reproduce", "--figure", "fig3"],
    ));
    assert_eq!(out.status.code(), Some(1));
    let err = error_line(&out);
    assert_eq!(err["error"], "unknown_figure");
    assert!(err["message"].as_str().unwrap().contains("fig3"));
}

#[test]
fn bad_inputs_are_json_errors() {
    let out = sqrs(&["--preset", "lunar", "config"]);
    assert_eq!(error_line(&out)["error"], "unknown_preset");

    let out = sqrs(&["--pulses", "0", "config"]);
    assert_eq!(error_line(&out)["error"], "config");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seed = \"many\"\n").unwrap();
    let out = sqrs(&["--config", path.to_str().unwrap(), "config"]);
    assert!(!out.status.success());
    assert_eq!(error_line(&out)["error"], "toml");

    let out = sqrs(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = sqrs(&[
        "--preset",
        "ideal",
        "--pulses",
        "100",
        "--calibration-pulses",
        "100",
        "--phases",
        "1.0",
        "--out",
        target.to_str().unwrap(),
        "simulate",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"], "io");
}
