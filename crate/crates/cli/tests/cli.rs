//! End-to-end runs of the `fitest` binary.

use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn fitest(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fitest"));
    cmd.args(args).env_remove("FB_SEED");
    cmd
}

fn run(mut cmd: Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `y = 0.5 + 0.5·x + u` with an optional intercept shift of `jump` over
/// rows `range`.
fn write_data(path: &Path, t: usize, jump: f64, range: std::ops::Range<usize>, seed: u64) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut text = String::from("# synthetic regression data\ny,x1\n");
    for k in 0..t {
        let x: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.sample(StandardNormal);
        let shift = if range.contains(&k) { jump } else { 0.0 };
        text.push_str(&format!("{},{}\n", 0.5 + 0.5 * x + u + shift, x));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn stable_data_does_not_reject() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("stable.csv");
    write_data(&data, 500, 0.0, 0..0, 1);
    let out = run(fitest(&["--mode", "test", "--input", data.to_str().unwrap()]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("qmax"), "{text}");
}

#[test]
fn short_lived_break_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("break.csv");
    write_data(&data, 500, 6.0, 350..380, 2);
    let report_dir = dir.path().join("report");
    let out = run(fitest(&[
        "--input",
        data.to_str().unwrap(),
        "--stat",
        "mqmax",
        "--variance",
        "q1",
        "--out",
        report_dir.to_str().unwrap(),
        "--json",
    ]));
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["any_reject"], true);
    assert_eq!(v["T"], 500);
    let saved: serde_json::Value = serde_json::from_slice(&std::fs::read(report_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
}

#[test]
fn malformed_cell_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "y,x1\n1.0,2.0\n0.5,abc\n").unwrap();
    let out = run(fitest(&["--mode", "test", "--input", data.to_str().unwrap()]));
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("row 2") && err.contains("x1"), "{err}");
}

#[test]
fn unknown_preset_lists_the_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(fitest(&["--mode", "reproduce", "--preset", "table99", "--out", dir.path().to_str().unwrap()]));
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("table99") && err.contains("table1") && err.contains("fig-P1a"), "{err}");
}

#[test]
fn missing_input_is_an_error() {
    let out = run(fitest(&["--mode", "test", "--input", "/nonexistent/data.csv"]));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/nonexistent/data.csv"));
}

fn simulate_csv(extra: &[&str], env_seed: Option<&str>) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let mut args =
        vec!["--mode", "simulate", "--family", "S1", "--total", "100", "--reps", "200", "--out", dir.path().to_str().unwrap()];
    args.extend_from_slice(extra);
    let mut cmd = fitest(&args);
    if let Some(s) = env_seed {
        cmd.env("FB_SEED", s);
    }
    let out = run(cmd);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    std::fs::read(dir.path().join("simulation.csv")).unwrap()
}

#[test]
fn environment_seed_overrides_the_flag() {
    let from_env = simulate_csv(&["--seed", "1"], Some("7"));
    let from_flag = simulate_csv(&["--seed", "7"], None);
    let other = simulate_csv(&["--seed", "1"], None);
    assert_eq!(from_env, from_flag);
    assert_ne!(from_env, other);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"mode": "simulate", "family": "S1", "total": 100, "reps": 200, "seed": 3, "stat": ["bmax", "mqmax"], "variance": "q1"}"#)
        .unwrap();
    let a = tempfile::tempdir().unwrap();
    let out = run(fitest(&["--config", cfg.to_str().unwrap(), "--out", a.path().to_str().unwrap()]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let via_config = std::fs::read(a.path().join("simulation.csv")).unwrap();
    let via_flags = simulate_csv(&["--seed", "3", "--stat", "bmax", "--stat", "mqmax", "--variance", "q1"], None);
    assert_eq!(via_config, via_flags);
}

#[test]
fn reproduce_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(fitest(&["--preset", "table1", "--reps", "100", "--seed", "5", "--out", dir.path().to_str().unwrap()]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["table1.csv", "table1_table.csv", "table1_summary.json", "table1_manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("table1_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["preset"], "table1");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["replications"], 100);
    assert_eq!(manifest["experiments"], 12);
    let wide = std::fs::read_to_string(dir.path().join("table1_table.csv")).unwrap();
    assert!(wide.starts_with("T,T_m,T_n,delta,lambda0,p,"));
    assert_eq!(wide.lines().count(), 13);
    let long = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(long.lines().next().unwrap().contains("rejection_rate"));
}

#[test]
fn thread_count_does_not_change_output() {
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let out =
            run(fitest(&["--preset", "table1", "--reps", "200", "--threads", threads, "--out", dir.path().to_str().unwrap()]));
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push((
            std::fs::read(dir.path().join("table1.csv")).unwrap(),
            std::fs::read(dir.path().join("table1_summary.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn zero_threads_is_rejected() {
    let out = run(fitest(&["--preset", "table1", "--threads", "0"]));
    assert_eq!(code(&out), 2);
}
