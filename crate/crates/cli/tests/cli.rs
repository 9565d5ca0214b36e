use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn isolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isolab")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn summary(csv: &str) -> Value {
    let line = csv.lines().find_map(|l| l.strip_prefix("# summary ")).expect("summary line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn profile_table_on_z2() {
    let out = isolab(&["profile", "--family", "z2", "--rmax", "10", "--deterministic"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# isolab "));
    assert_eq!(lines.next().unwrap(), "r,value,minorant,ratio");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[0].starts_with("1,4,4,"));
    assert!(text.contains("# check lipschitz ok"));
}

#[test]
fn heisenberg_stacks_exact() {
    let out = isolab(&["heis", "--random-stacks", "500", "--deterministic"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&stdout(&out))["all_identities_exact"], Value::Bool(true));
}

#[test]
fn mixing_slope_report() {
    let out = isolab(&["mixing", "--d", "3", "--m", "8,12,16,24", "--deterministic"]);
    assert_eq!(out.status.code(), Some(0));
    let slope = summary(&stdout(&out))["slope"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let args = ["curlfit", "--n", "3,3", "--samples", "20", "--seed", "7", "--deterministic"];
    let a = isolab(&args);
    let b = isolab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = isolab(&["curlfit", "--n", "3,3", "--samples", "20", "--seed", "8", "--deterministic"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn timestamp_only_without_deterministic_flag() {
    let out = isolab(&["tempered", "--d", "1", "--kmax", "3"]);
    let header = stdout(&out).lines().next().unwrap().to_string();
    assert!(header.contains(" at "));
}

#[test]
fn json_config_run() {
    let path = scratch("balloon.json");
    std::fs::write(&path, r#"{"subcommand": "balloon", "params": {"sizes": [4, 12]}, "seed": 3, "format": "json"}"#).unwrap();
    let out = isolab(&["run", "--config", path.to_str().unwrap(), "--deterministic"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["subcommand"], "balloon");
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 16);
}

#[test]
fn flags_and_config_share_a_hash() {
    let path = scratch("tempered.json");
    std::fs::write(&path, r#"{"subcommand": "tempered", "params": {"d": 1, "kmax": 3}}"#).unwrap();
    let from_config = isolab(&["run", "--config", path.to_str().unwrap(), "--deterministic"]);
    let from_flags = isolab(&["tempered", "--d", "1", "--kmax", "3", "--deterministic"]);
    assert_eq!(from_config.stdout, from_flags.stdout);
}

#[test]
fn output_file() {
    let path = scratch("tempered.csv");
    let out = isolab(&["tempered", "--d", "2", "--kmax", "2", "--deterministic", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().contains("# check below_2_pow_d ok"));
}

#[test]
fn schema_errors_exit_2() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"subcommand": "balloon", "params": {"sizes": [4, 12], "bogus": 1}}"#).unwrap();
    assert_eq!(isolab(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&path, r#"{"subcommand": "nope"}"#).unwrap();
    assert_eq!(isolab(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(isolab(&["profile", "--family", "z9"]).status.code(), Some(2));
}

#[test]
fn resource_guard_exits_3() {
    let out = isolab(&["balloon", "--sizes", "4,12,36,108,324,972"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("isolab:"));
}

#[test]
fn thread_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_isolab"))
        .env("ISOLAB_THREADS", "1")
        .args(["tempered", "--d", "1", "--kmax", "2", "--deterministic"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_isolab"))
        .env("ISOLAB_THREADS", "many")
        .args(["tempered", "--d", "1", "--kmax", "2"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
