use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hybrid_precoding::harness::{parse_config, read_json, CSV_HEADER, SCENARIO_NAMES};

fn hpsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpsim"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
name = "small"
users = 2
n_rf = [4]
snr_db = [-10.0, 0.0]
trials = 3
master_seed = 9

[bs_array]
horizontal = 4
vertical = 4
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("out.csv");
    let result = hpsim(&[
        "run",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(lines.len(), 1 + 4 * 2);
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').count() == 12 && l.starts_with("small,")));
}

#[test]
fn seed_flag_overrides_config_and_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("out.json");
    let result = hpsim(&[
        "run",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "42",
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let parsed = read_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(parsed.config.master_seed, 42);
    assert_eq!(parsed.provenance.master_seed, 42);
    assert!(parsed.records.iter().all(|r| r.seed == 42 && r.trials == 3));
}

#[test]
fn runs_are_reproducible_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let first = hpsim(&["run", "--config", &config, "--threads", "1"]);
    let second = hpsim(&["run", "--config", &config, "--threads", "3"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), SMALL);
    let ok = hpsim(&["validate", "--config", &good]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("8 records"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "trials = 0\n").unwrap();
    let failed = hpsim(&["validate", "--config", bad.to_str().unwrap()]);
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("trials"));

    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, "[ao]\nepsilon = 1e-3\nbogus = 1\n").unwrap();
    let failed = hpsim(&["validate", "--config", unknown.to_str().unwrap()]);
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("ao"));
}

#[test]
fn errors_exit_nonzero() {
    assert!(!hpsim(&["run", "--config", "/no/such/file.toml"])
        .status
        .success());
    assert!(!hpsim(&["run", "--scenario", "fig9"]).status.success());
    assert!(!hpsim(&["run"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("missing/dir/out.csv");
    assert!(
        !hpsim(&["run", "--config", &config, "--out", out.to_str().unwrap()])
            .status
            .success()
    );
    assert!(!hpsim(&["run", "--config", &config, "--threads", "0"])
        .status
        .success());
}

#[test]
fn scenarios_lists_and_dumps_valid_configs() {
    let dir = tempfile::tempdir().unwrap();
    let result = hpsim(&["scenarios", "--dump", dir.path().to_str().unwrap()]);
    assert!(result.status.success());
    let listing = String::from_utf8_lossy(&result.stdout);
    for name in SCENARIO_NAMES {
        assert!(listing.contains(name));
    }
    let dumped: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dumped.len(), 1 + 1 + 6 + 2 + 1 + 2 + 2);
    for path in dumped {
        parse_config(&fs::read_to_string(&path).unwrap()).unwrap();
    }
}

#[test]
fn scenario_run_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig5.json");
    let result = hpsim(&[
        "run",
        "--scenario",
        "fig5",
        "--trials",
        "2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let runs = value.as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0]["records"].as_array().unwrap().len(), 5);
}
