//! End-to-end CLI behavior: flag handling, exit codes, artifact layout.

use std::fs;
use std::process::Command;
use tempfile::TempDir;

fn dpre() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpre"))
}

#[test]
fn verify_subcommand_is_green() {
    let dir = TempDir::new().unwrap();
    let out = dpre()
        .args(["verify", "--seed", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verification.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true, "{report:#}");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "definitely_not_a_key = 1\n").unwrap();
    let out = dpre()
        .args(["beta4-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cost_refusal_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("huge.toml");
    fs::write(&cfg, "cost_ceiling = 10.0\n[beta4]\nbeta = [0.7]\n").unwrap();
    let out = dpre()
        .args(["beta4-scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ceiling"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_exits_two() {
    let out = dpre()
        .args(["verify", "--config", "/nonexistent/path.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_scalars() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    fs::write(&cfg_path, "seed = 1\nsamples = 8\n[beta4]\nbeta = [0.7]\n").unwrap();
    let out_dir = dir.path().join("flagged");
    let out = dpre()
        .args(["beta4-scan", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "99", "--out"])
        .arg(&out_dir)
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert!(out_dir.join("beta4_scan.csv").exists());
}

#[test]
fn percolation_emits_wilson_interval() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("perc.toml");
    fs::write(
        &cfg_path,
        "[percolation]\np = [0.85]\nhorizon = 30\ntrials = 40\n",
    )
    .unwrap();
    let out = dpre()
        .args(["percolation", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("percolation.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let (su, lo, hi): (f64, f64, f64) = (
        row[4].parse().unwrap(),
        row[5].parse().unwrap(),
        row[6].parse().unwrap(),
    );
    assert!(lo <= su && su <= hi);
}
