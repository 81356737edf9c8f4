//! End-to-end tests of the command-line interface: subcommands, override
//! flags, artifact layout, and the exit-code contract (0 success, 1 solver
//! failure, 2 config error).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_osga-bench"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const SMALL_LASSO: &str = "family = lasso\n\
    m = 20\n\
    n = 40\n\
    density = sparse:0.2\n\
    lambda = 0.4\n\
    solvers = osga,fista\n\
    max_iters = 15\n\
    seed = 51\n";

#[test]
fn run_writes_bundle_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.conf", SMALL_LASSO);
    let out_dir = dir.path().join("results");

    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();

    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("summary:"), "stdout: {text}");
    assert!(out_dir.join("summary.csv").is_file());
    assert!(out_dir.join("profile.csv").is_file());
    assert!(out_dir.join("trace_lasso_i0_osga.csv").is_file());
    assert!(out_dir.join("trace_lasso_i0_fista.csv").is_file());
}

#[test]
fn override_flags_replace_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.conf", SMALL_LASSO);
    let out_dir = dir.path().join("elsewhere");

    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .arg("--seed")
        .arg("99")
        .arg("--max-iters")
        .arg("5")
        .arg("--solvers")
        .arg("osga")
        .output()
        .unwrap();

    assert!(output.status.success(), "stderr: {}", stderr(&output));
    assert!(out_dir.join("trace_lasso_i0_osga.csv").is_file());
    assert!(
        !out_dir.join("trace_lasso_i0_fista.csv").exists(),
        "solver override should drop fista"
    );
    let trace = fs::read_to_string(out_dir.join("trace_lasso_i0_osga.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 6, "header plus rows for iterations 0 through 5");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write_config(dir.path(), "bad.conf", "family = lasso\nwhatever = 3\nseed = 1\n");
    let output = bin().arg("run").arg(&bad_key).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("whatever"), "stderr: {}", stderr(&output));

    let missing = dir.path().join("nonexistent.conf");
    let output = bin().arg("run").arg(&missing).output().unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr(&output));

    let bad_solvers = write_config(dir.path(), "ok.conf", SMALL_LASSO);
    let output = bin()
        .arg("run")
        .arg(&bad_solvers)
        .arg("--solvers")
        .arg("osga,unknown")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr(&output));
}

#[test]
fn solver_failure_exits_one_and_keeps_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "stall.conf",
        "family = lasso\n\
         m = 15\n\
         n = 30\n\
         lambda = 1e30\n\
         solvers = nes83,pga\n\
         max_iters = 12\n\
         seed = 7\n",
    );
    let out_dir = dir.path().join("results");

    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();

    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let nes_row = summary
        .lines()
        .find(|l| l.starts_with("lasso,0,nes83,"))
        .expect("nes83 row present");
    assert!(nes_row.contains("error"), "row: {nes_row}");
    let pga_row = summary
        .lines()
        .find(|l| l.starts_with("lasso,0,pga,"))
        .expect("pga row present");
    assert!(pga_row.contains(",ok,"), "row: {pga_row}");
}

#[test]
fn profile_subcommand_rebuilds_curves_from_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.conf", SMALL_LASSO);
    let out_dir = dir.path().join("results");
    let output = bin()
        .arg("run")
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));

    let written = fs::read_to_string(out_dir.join("profile.csv")).unwrap();
    fs::remove_file(out_dir.join("profile.csv")).unwrap();

    let output = bin().arg("profile").arg(out_dir.join("summary.csv")).output().unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let rebuilt = fs::read_to_string(out_dir.join("profile.csv")).unwrap();
    assert_eq!(written, rebuilt, "profile must be reproducible from the summary");

    let output = bin().arg("profile").arg(dir.path().join("absent.csv")).output().unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
}

#[test]
fn check_subcommand_reports_pass() {
    let output = bin().arg("check").output().unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("PASS"), "stdout: {text}");
    assert!(!text.contains("FAIL"), "stdout: {text}");
}
