//! End-to-end checks of the `graphon-lab` binary: flag handling, exit codes
//! and output files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_graphon-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("graphon_lab_cli_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn run_custom_grid_kernel_succeeds() {
    let dir = scratch("custom");
    let grid = dir.join("kernel.grid");
    std::fs::write(&grid, "N 2 T_SAMPLES 1\n1 1 1 1\n").unwrap();
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "experiment = custom\nkernel_file = {}\nn = 10\nt_end = 4\ntau = 1\nout_dir = {}\n",
            grid.display(),
            dir.join("out").display()
        ),
    )
    .unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    for file in [
        "trajectory.csv",
        "diagnostics.csv",
        "spectral.csv",
        "summary.json",
        "snapshots.csv",
        "config.txt",
    ] {
        assert!(dir.join("out").join(file).exists(), "missing {file}");
    }
    let summary = std::fs::read_to_string(dir.join("out/summary.json")).unwrap();
    assert!(summary.contains("\"overall_pass\": true"), "{summary}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = scratch("badcfg");
    let config = dir.join("bad.cfg");
    std::fs::write(&config, "experiment = leader\nn = not_a_number\n").unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("line 2") && stderr.contains("`n`"),
        "{stderr}"
    );

    let output = bin()
        .args(["run", "--config"])
        .arg(dir.join("missing.cfg"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let output = bin().args(["run", "--frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    let output = bin().output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn flags_override_config_values() {
    let dir = scratch("override");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "experiment = balanced_cycle\nn = 8\nt_end = 50\ntau = 1\nout_dir = {}\n",
            dir.join("ignored").display()
        ),
    )
    .unwrap();
    let out = dir.join("actual");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--n", "6", "--t-end", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(!dir.join("ignored").exists());
    let echoed = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echoed.contains("n = 6"), "{echoed}");
    assert!(echoed.contains("t_end = 3.0000000000000000e0"), "{echoed}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_writes_rates_csv() {
    let dir = scratch("sweep");
    let config = dir.join("sweep.cfg");
    std::fs::write(
        &config,
        format!(
            "experiment = rate_sweep\nsweep_ns = 6,12\nt_end = 20\ntau = 1\nout_dir = {}\n",
            dir.join("out").display()
        ),
    )
    .unwrap();
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let rates = std::fs::read_to_string(dir.join("out/rates.csv")).unwrap();
    let mut lines = rates.lines();
    assert_eq!(lines.next(), Some("N,lambda2,rate_l2,rate_linf"));
    assert_eq!(lines.clone().count(), 2);
    assert!(Path::new(&dir.join("out/N_6/diagnostics.csv")).exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn single_point_sweep_is_vacuously_monotone() {
    let dir = scratch("sweep1");
    let config = dir.join("sweep.cfg");
    std::fs::write(
        &config,
        format!(
            "experiment = rate_sweep\nsweep_ns = 10\nt_end = 10\ntau = 1\nout_dir = {}\n",
            dir.join("out").display()
        ),
    )
    .unwrap();
    let output = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn defaults_run_via_experiment_flag() {
    let dir = scratch("defaults");
    let output = bin()
        .args([
            "run",
            "--experiment",
            "balanced_cycle",
            "--n",
            "8",
            "--t-end",
            "2",
            "--out",
        ])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let _ = std::fs::remove_dir_all(&dir);
}
