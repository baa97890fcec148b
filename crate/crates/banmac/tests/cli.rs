//! Black-box tests of the `banmac` binary: exit codes, CSV plumbing, trace
//! dumps, and scenario-file loading.

use banmac::model::preset_scenario;
use banmac::model::SensorGroup;
use banmac::sweep::CSV_HEADER;
use std::path::Path;
use std::process::{Command, Output};

fn banmac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_banmac"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn run_preset_prints_header_and_row() {
    let out = banmac(&[
        "run", "--preset", "group1", "--dat", "23", "--dl", "8", "--load", "0.01", "--seed", "1",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row = lines.next().unwrap();
    assert!(row.starts_with("hybrid,group1,23,8,0.01,1,"), "row: {row}");
    assert!(text.contains("throughput_S"));
}

#[test]
fn missing_scenario_file_is_a_usage_error() {
    let out = banmac(&["run", "--scenario", "/nonexistent/run.toml"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("file not found"), "stderr: {}", stderr(&out));
}

#[test]
fn off_sweep_dat_needs_the_override() {
    let out = banmac(&["run", "--preset", "group1", "--dat", "24"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("outside the standard sweep"), "stderr: {}", stderr(&out));

    let out = banmac(&["run", "--preset", "group1", "--dat", "24", "--allow-any-dat"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("hybrid,group1,24,8,"));
}

#[test]
fn unknown_preset_and_scheme_are_usage_errors() {
    let out = banmac(&["run", "--preset", "group9"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("unknown group"));

    let out = banmac(&["run", "--preset", "group1", "--scheme", "csma"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("unknown scheme"), "stderr: {}", stderr(&out));

    let out = banmac(&["run"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("--preset or --scenario"));
}

#[test]
fn scenario_file_runs_like_its_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    let scenario = preset_scenario(SensorGroup::Group2, 15, 4, 0.05, 9).unwrap();
    scenario.save(&path).unwrap();

    let from_file = banmac(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(exit_code(&from_file), 0, "stderr: {}", stderr(&from_file));
    let from_preset = banmac(&[
        "run", "--preset", "group2", "--dat", "15", "--dl", "4", "--load", "0.05", "--seed", "9",
    ]);
    assert_eq!(stdout(&from_file), stdout(&from_preset));
}

#[test]
fn trace_dump_is_hybrid_only_and_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.trace");
    let out = banmac(&[
        "run", "--preset", "group3", "--load", "0.2", "--trace", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    let dump = std::fs::read_to_string(&path).unwrap();
    assert!(dump.starts_with("banmac-trace/1\n"), "dump head: {:.40}", dump);
    assert!(dump.contains("[slots]"));
    assert!(dump.contains("[messages]"));

    let out = banmac(&[
        "run", "--preset", "group3", "--scheme", "aloha", "--trace", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("only available for the hybrid scheme"));
}

fn sweep_to(path: &Path) -> Output {
    banmac(&[
        "sweep",
        "--preset",
        "group1",
        "--scheme",
        "all",
        "--dat",
        "23,15",
        "--dl",
        "8",
        "--loads",
        "geom:0.01:1.0:3",
        "--seeds",
        "2",
        "--out",
        path.to_str().unwrap(),
    ])
}

#[test]
fn sweeps_rerun_byte_identical_and_sorted_by_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");

    let out = sweep_to(&first);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("wrote 36 rows"), "stdout: {}", stdout(&out));
    let out = sweep_to(&second);
    assert_eq!(exit_code(&out), 0);

    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");

    let text = String::from_utf8(a).unwrap();
    let schemes: Vec<&str> =
        text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(schemes.len(), 36);
    assert!(schemes[..12].iter().all(|&s| s == "hybrid"));
    assert!(schemes[12..24].iter().all(|&s| s == "aloha"));
    assert!(schemes[24..].iter().all(|&s| s == "tdma"));
    assert!(!text.contains("\r\n"), "LF endings only");
}

#[test]
fn bad_sweep_grids_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out_arg = out_path.to_str().unwrap();

    let out = banmac(&["sweep", "--preset", "group1", "--loads", "geom:0:1", "--out", out_arg]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("invalid grid"));

    let out = banmac(&["sweep", "--preset", "group1", "--loads", "geom:0:1.0:5", "--out", out_arg]);
    assert_eq!(exit_code(&out), 1, "geometric grids need a positive minimum");

    let out = banmac(&["sweep", "--preset", "group1", "--seeds", "two", "--out", out_arg]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("bad seed count"));

    let out = banmac(&["sweep", "--preset", "group1", "--dat", "23,24", "--out", out_arg]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("outside the standard sweep"));
}

#[test]
fn help_exits_zero() {
    let out = banmac(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    let out = banmac(&["sweep", "--help"]);
    assert_eq!(exit_code(&out), 0);
}
