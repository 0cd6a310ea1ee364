use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
seed = 3
lines = 2
length_range = [40.0, 90.0]
schemes = ["zf", "mfb"]
direction = "downstream"

[[tone_plans]]
profile_name = "coarse"
spacing_hz = 3312000.0
num_tones = 16
start_hz = 3312000.0
bandwidth_hz = 53000000.0
duplexing = "tdd"
"#;

fn dslvec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dslvec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = dslvec(&["run", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = out.join("small_coarse_downstream.csv");
    assert!(csv.exists());
    assert!(out.join("small_coarse_downstream.csv.meta.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("small_coarse_downstream.csv"));
}

#[test]
fn validate_prints_resolved_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = dslvec(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("profiles: coarse"));
    assert!(text.contains("schemes: zf, mfb"));
    assert!(text.contains("seed = 3"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("colour = \"red\"\n{SMALL}"));
    for cmd in ["validate", "run"] {
        let o = dslvec(&[cmd, &cfg]);
        assert_eq!(o.status.code(), Some(2), "{cmd}: {}", stderr(&o));
        assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    }
}

#[test]
fn invalid_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{SMALL}\n[spectrum]\ngap_db = -1.0\n"));
    let o = dslvec(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spectrum.gap_db"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_a_config_error() {
    let o = dslvec(&["validate", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn numerical_failure_reports_tone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tight.toml",
        &format!("{SMALL}\n[canceler]\ncond_limit = 1.05\n"),
    );
    let o = dslvec(&["run", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("failing tone index:"), "{}", stderr(&o));
}

#[test]
fn zero_jobs_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let o = dslvec(&["run", &cfg, "--jobs", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn profiles_lists_builtins() {
    let o = dslvec(&["profiles"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["gfast106", "gfast212", "mgfast424", "mgfast848"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    assert!(text.contains("anticipated"));
}

#[test]
fn fig6_honours_seed_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f6");
    let o = dslvec(&["fig6", "--out", out.to_str().unwrap(), "--seed", "4", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = fs::read_to_string(out.join("fig6.csv.meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 4"), "{meta}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(dslvec(&["fig9"]).status.code(), Some(2));
}
