//! End-to-end checks of the command-line surface: exit codes, file
//! outputs, determinism, CSV schemas.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_helmprec")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("helmprec-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn helmprec")
}

#[test]
fn gen_medium_is_deterministic_and_reports_stats() {
    let dir = tmpdir("gen");
    let out = run(&["gen-medium", "--seed", "3", "--n", "64", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("c_min") && text.contains("c_mean"), "{text}");
    let first = std::fs::read(dir.join("medium-3.hfld")).unwrap();
    let out2 = run(&["gen-medium", "--seed", "3", "--n", "64", "--out", dir.to_str().unwrap()]);
    assert!(out2.status.success());
    let second = std::fs::read(dir.join("medium-3.hfld")).unwrap();
    assert_eq!(first, second, "same seed must give identical files");
}

#[test]
fn gen_medium_zero_amplitude_is_constant() {
    let dir = tmpdir("gen0");
    let out = run(&[
        "gen-medium", "--seed", "9", "--n", "32", "--zero-amplitude",
        "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (_, field) = helmprec_core::fileio::read_field(&dir.join("medium-9.hfld")).unwrap();
    for v in field.iter() {
        assert_eq!(*v, 1.0);
    }
}

#[test]
fn solve_writes_outputs_and_respects_tol_ordering() {
    let dir = tmpdir("solve");
    let gen = run(&["gen-medium", "--seed", "2", "--n", "64", "--out", dir.to_str().unwrap()]);
    assert!(gen.status.success());
    let medium = dir.join("medium-2.hfld");
    let out_dir = dir.join("run");
    let out = run(&[
        "solve", "--medium", medium.to_str().unwrap(), "--omega", "8pi",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("solution_re.hfld").exists());
    assert!(out_dir.join("solution_im.hfld").exists());
    let csv = std::fs::read_to_string(out_dir.join("residuals.csv")).unwrap();
    assert!(csv.starts_with("iteration,residual"));
    let iters_tight = csv.lines().count() - 1;
    // Looser tolerance stops earlier.
    let out_dir2 = dir.join("run2");
    let out = run(&[
        "solve", "--medium", medium.to_str().unwrap(), "--omega", "8pi",
        "--tol", "1e-3", "--out", out_dir2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv2 = std::fs::read_to_string(out_dir2.join("residuals.csv")).unwrap();
    let iters_loose = csv2.lines().count() - 1;
    assert!(iters_loose < iters_tight, "{iters_loose} !< {iters_tight}");
}

#[test]
fn solve_missing_medium_is_usage_error() {
    let out = run(&["solve", "--medium", "/nonexistent/m.hfld", "--omega", "8pi"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn sweep_writes_csv_schema() {
    let dir = tmpdir("sweep");
    let out = run(&[
        "sweep-freq", "--seed", "2", "--omegas", "6pi,8pi", "--nw", "10",
        "--bands", "auto", "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("omega,iterations,prepare_s,execute_s"));
    assert_eq!(lines.count(), 2);
    // Descending frequencies are rejected.
    let bad = run(&["sweep-freq", "--omegas", "8pi,6pi", "--out", dir.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn histogram_single_medium() {
    let dir = tmpdir("hist");
    let out = run(&[
        "histogram", "--n-media", "1", "--seed", "2", "--omega", "8pi", "--nw", "10",
        "--bands", "auto", "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("histogram.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("seed,c_min,c_max,iterations,converged"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn config_file_keys_with_flag_override() {
    let dir = tmpdir("cfg");
    let cfg_path = dir.join("exp.cfg");
    std::fs::write(&cfg_path, "seed = 4\nn = 32\nout = /this/is/overridden\n").unwrap();
    let out = run(&[
        "gen-medium", "--config", cfg_path.to_str().unwrap(), "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("medium-4.hfld").exists());
}

#[test]
fn verify_suite_filter_and_fault_injection() {
    let out = run(&["verify", "--suite", "cutoffs"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS  cutoffs"));
    // The hidden fault flag corrupts one diagonal weight; the frame suite
    // must notice and the exit code turn nonzero.
    let out = run(&["verify", "--suite", "frame", "--inject-weight-fault"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_command_and_flags() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--no-such-flag", "1"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
}

#[test]
fn path_independent_of_cwd() {
    let _ = Path::new(bin());
}
