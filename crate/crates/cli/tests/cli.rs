//! End-to-end tests of the `backstep` binary: artifact layout, determinism,
//! exit codes and error wording.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn backstep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_backstep"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    backstep().args(args).output().expect("binary runs")
}

#[test]
fn poleshift_at_small_truncation_passes_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 16\n");
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "poleshift",
    ]);
    assert!(output.status.success(), "{output:?}");
    assert!(out_dir.join("poleshift.csv").exists());
    assert!(out_dir.join("config_echo.toml").exists());

    let csv = fs::read_to_string(out_dir.join("poleshift.csv")).unwrap();
    let data_lines: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .collect();
    assert_eq!(data_lines.len(), 16);
    for line in data_lines {
        let mismatch: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert!(mismatch <= 1e-8);
    }
}

#[test]
fn identical_seeds_give_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 24\nseed = 7\n");
    let mut contents = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = tmp.path().join(sub);
        let output = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--no-header-timestamp",
            "simulate",
        ]);
        assert!(output.status.success(), "{output:?}");
        contents.push(fs::read(out_dir.join("trajectory.csv")).unwrap());
    }
    assert_eq!(contents[0], contents[1]);
}

#[test]
fn seed_override_changes_the_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 24\n");
    let mut contents = Vec::new();
    for (sub, seed) in [("a", "1"), ("b", "2")] {
        let out_dir = tmp.path().join(sub);
        let output = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
            "--no-header-timestamp",
            "simulate",
        ]);
        assert!(output.status.success(), "{output:?}");
        contents.push(fs::read(out_dir.join("trajectory.csv")).unwrap());
    }
    assert_ne!(contents[0], contents[1]);
}

#[test]
fn timestamp_header_is_suppressible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 8\n");
    let with = tmp.path().join("with");
    let without = tmp.path().join("without");
    assert!(run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        with.to_str().unwrap(),
        "spectrum"
    ])
    .status
    .success());
    assert!(run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        without.to_str().unwrap(),
        "--no-header-timestamp",
        "spectrum"
    ])
    .status
    .success());
    let a = fs::read_to_string(with.join("spectrum.csv")).unwrap();
    let b = fs::read_to_string(without.join("spectrum.csv")).unwrap();
    assert!(a.contains("# generated_unix="));
    assert!(!b.contains("# generated_unix="));
    assert!(a.contains("# seed=0") && b.contains("# seed=0"));
}

#[test]
fn even_sector_poleshift_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 8\nparity = \"even\"\n");
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "poleshift",
    ]);
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out_dir.join("poleshift.csv")).unwrap();
    // nine rows: the constant mode plus modes 1..=8
    let rows = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .count();
    assert_eq!(rows, 9);
    assert!(csv.lines().any(|l| l.starts_with("0,")));
}

#[test]
fn invalid_range_errors_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lambda = -1.0\n");
    let output = run(&["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("lambda"), "stderr: {stderr}");
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lambad = 1.0\n");
    let output = run(&["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("lambad"), "stderr: {stderr}");
}

#[test]
fn control_drives_seeded_state_to_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 12\nseed = 3\n");
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "control",
    ]);
    assert!(output.status.success(), "{output:?}");
    assert!(out_dir.join("control_coefficients.csv").exists());
    assert!(out_dir.join("control_signal.csv").exists());
}

#[test]
fn sweep_writes_per_rate_directories_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "n = 24\nsweep_lambdas = [0.5, 1.0]\ngrid_points = 128\n",
    );
    let out_dir = tmp.path().join("out");
    let output = backstep()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "sweep",
        ])
        .env("SPECTRAL_BACKSTEP_THREADS", "2")
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(out_dir.join("lambda_0.5/trajectory.csv").exists());
    assert!(out_dir.join("lambda_1/trajectory.csv").exists());
    let summary = fs::read_to_string(out_dir.join("sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = summary
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("lambda,"))
        .collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        // fit quality is reported, not gated; sanity-check it is in range
        let rel_err: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.0..0.2).contains(&rel_err), "row {row}");
    }
}

#[test]
fn failing_multiplier_check_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    // logarithmic growth cannot match a power law: the spectrum command
    // must flag it and fail
    let table: Vec<String> = (1..=64)
        .map(|s| format!("{:.12}", (1.0 + s as f64).ln()))
        .collect();
    let cfg = write_config(
        tmp.path(),
        &format!(
            "kind = \"generic_multiplier\"\nalpha = 1.2\nh = \"table\"\nh_table = [{}]\nn = 64\n",
            table.join(", ")
        ),
    );
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "spectrum",
    ]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("multiplier"), "stderr: {stderr}");
}

#[test]
fn feedback_emits_gain_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 32\n");
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "feedback",
    ]);
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(out_dir.join("gains.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("n,re_K,im_K,re_k,im_k")));
    let rows = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n,"))
        .count();
    assert_eq!(rows, 32);
}

#[test]
fn riesz_emits_bounds_and_sum_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n = 32\n");
    let out_dir = tmp.path().join("out");
    let output = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "riesz",
    ]);
    assert!(output.status.success(), "{output:?}");
    for file in ["riesz_bounds.csv", "sum_bounds.csv", "compact_tail.csv"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
}
