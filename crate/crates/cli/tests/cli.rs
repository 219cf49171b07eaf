use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_prestrain-plate");

const SINE: &str = r#"
name = "sine"
[prestrain]
gamma = 3.0
[grid]
n1 = 16
n2 = 16
m = 3
[sweep]
h = [0.125, 0.0625, 0.03125]
[opt]
tol = 1e-8
max_iter = 30
minimize = true
[q2_check]
samples = 50
seed = 9
[recovery]
gradient = "analytic"
[recovery.v3]
kind = "sine"
params = { amplitude = 1.0, k = [3.141592653589793, 3.141592653589793] }
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_line(out: &Output) -> String {
    let s = String::from_utf8_lossy(&out.stderr).into_owned();
    let lines: Vec<&str> = s.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(lines.len(), 1, "expected one error line, got:\n{s}");
    lines[0].to_string()
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = run(&["frobnicate", "--config", "x.toml", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["limit-min", "--config", "/nonexistent/cfg.toml", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: config: "));
}

#[test]
fn invalid_gamma_names_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[prestrain]\ngamma = 1.5\n");
    let out = run(&["full-min", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.starts_with("error: config: ") && line.contains("gamma > 2"), "{line}");
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SINE);
    let out = run(&["q2-check", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--threads", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: config: "));
}

#[test]
fn subcommands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SINE);
    let out_dir = dir.path().join("out");
    let o = out_dir.to_str().unwrap();
    let expectations: [(&str, &[&str]); 5] = [
        ("q2-check", &["q2_check.csv"]),
        ("limit-min", &["v3.csv", "limit.json"]),
        ("recovery-sweep", &["curve.csv", "fit.json"]),
        ("diagnostics", &["curvature.csv", "rotation_misfit.csv", "expansion.csv"]),
        ("full-min", &["report.csv", "fits.json", "iterations_00_h0.125.csv"]),
    ];
    for (cmd, files) in expectations {
        let out = run(&[cmd, "--config", &cfg, "--out", o, "--threads", "2", "--direct-solve"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        for f in files.iter().chain(&["summary.txt", "config_echo.toml"]) {
            assert!(out_dir.join(f).exists(), "{cmd} did not write {f}");
        }
    }
    let echo = fs::read_to_string(out_dir.join("config_echo.toml")).unwrap();
    assert!(echo.contains("direct = true"), "--direct-solve is reflected in the echo:\n{echo}");
    let curve = fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    assert!(curve.starts_with("h,rescaled_energy,reference_Igamma,abs_error\n"));
    let log = fs::read_to_string(out_dir.join("iterations_00_h0.125.csv")).unwrap();
    assert!(log.starts_with("iter,energy,grad_norm,step\n"));

    let out = run(&["report", "--out", o]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("report.csv") && summary.contains("curve.csv"), "{summary}");
}

#[test]
fn report_without_tables_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: degenerate-input: "));
}
