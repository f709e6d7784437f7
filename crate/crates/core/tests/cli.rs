//! End-to-end runs of the `thermoform` binary.

use std::path::Path;
use std::process::Command;

fn thermoform(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .args(args)
        .env("THERMOFORM_OUT", out)
        .output()
        .expect("binary runs")
}

fn summary(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn list_fixtures_prints_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out = thermoform(dir.path(), &["list-fixtures", "doubling"]);
    assert!(out.status.success());
    let catalog: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = catalog
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["doubling", "doubling-weighted"]);
}

#[test]
fn vp_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = thermoform(dir.path(), &["vp", "--fixture", "golden", "--strict"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let first = summary(&dir.path().join("golden_vp.json"));
    assert_eq!(first["fingerprint"].as_str().unwrap().len(), 64);
    assert_eq!(first["failures"].as_array().map_or(0, |a| a.len()), 0);
    let csvs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert!(!csvs.is_empty());
    let out = thermoform(dir.path(), &["vp", "--fixture", "golden", "--strict"]);
    assert!(out.status.success());
    let second = summary(&dir.path().join("golden_vp.json"));
    assert_eq!(first["results"], second["results"]);
    assert_eq!(first["fingerprint"], second["fingerprint"]);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"fixture": "full2", "task": "lambda", "n_max": 6}"#,
    )
    .unwrap();
    let out = thermoform(
        dir.path(),
        &["run", "--config", cfg.to_str().unwrap(), "--nmax", "8"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(&dir.path().join("full2_lambda.json"));
    assert_eq!(s["config"]["n_max"], 8);
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"fixture": "full2", "task": "lambda", "depth": -1}"#,
    )
    .unwrap();
    let out = thermoform(dir.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("depth"));
    let out = thermoform(dir.path(), &["entropy", "--fixture", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}
