//! End-to-end checks of the installed binary: argument plumbing, config
//! file loading, output locations and reproducibility.

use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmnoma"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const TINY_CONFIG: &str = r#"
n_drops = 2
seed = 11
snr_grid_db = [10.0, 20.0]
schemes = ["scheme2", "oma"]
outputs = ["min_ee", "sum_se", "min_rate"]

[config]
n_antennas = 8
n_rf = 2
codebook_size = 8
"#;

#[test]
fn run_reads_config_applies_overrides_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, TINY_CONFIG).unwrap();

    let mut first = bin();
    first
        .arg("run")
        .arg("--config")
        .arg(&config)
        .args(["--snr-db", "10"])
        .args(["--name", "a"])
        .arg("--out-dir")
        .arg(dir.path());
    let out = run_ok(&mut first);
    assert!(String::from_utf8_lossy(&out.stdout).contains("a.csv"));

    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "snr_db,scheme,metric,mean,stderr,n_effective_drops"
    );
    let body: Vec<&str> = lines.collect();
    // One SNR point after the override, two schemes, three metrics.
    assert_eq!(body.len(), 6);
    assert!(body.iter().all(|l| l.starts_with("1.00000000000e1,")));
    assert!(body.iter().any(|l| l.contains(",oma,min_ee,")));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(json["spec"]["seed"], 11);
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);

    let mut again = bin();
    again
        .arg("run")
        .arg("--config")
        .arg(&config)
        .args(["--snr-db", "10"])
        .args(["--name", "b"])
        .arg("--out-dir")
        .arg(dir.path());
    run_ok(&mut again);
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn unknown_scheme_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .args(["--scheme", "scheme9"])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scheme9"));
}

#[test]
fn env_var_sets_the_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, TINY_CONFIG).unwrap();
    let mut cmd = bin();
    cmd.arg("run")
        .arg("--config")
        .arg(&config)
        .args(["--snr-db", "10", "--scheme", "oma", "--n-drops", "1"])
        .env("MMNOMA_OUT_DIR", dir.path());
    run_ok(&mut cmd);
    assert!(dir.path().join("results.csv").is_file());
    assert!(dir.path().join("results.json").is_file());
}

#[test]
fn codebook_dumps_one_row_per_column_and_angle() {
    let out = run_ok(bin().args([
        "codebook",
        "--n-antennas",
        "4",
        "--codebook-size",
        "4",
        "--angle-points",
        "9",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "column,sin_theta,gain");
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 4 * 9);
    for l in &body {
        let fields: Vec<&str> = l.split(',').collect();
        assert_eq!(fields.len(), 3);
        let gain: f64 = fields[2].parse().unwrap();
        assert!((0.0..=1.0 + 1e-9).contains(&gain), "gain out of range: {l}");
    }
}

#[test]
fn codebook_writes_to_a_file_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("beams.csv");
    run_ok(
        bin()
            .args(["codebook", "--n-antennas", "4", "--codebook-size", "4"])
            .arg("--out")
            .arg(&path),
    );
    assert!(path.is_file());
    assert!(fs::read_to_string(path)
        .unwrap()
        .starts_with("column,sin_theta,gain"));
}

#[test]
fn oracle_validates_tiny_instances() {
    let out = run_ok(bin().args([
        "oracle",
        "--n-antennas",
        "8",
        "--n-rf",
        "1",
        "--codebook-size",
        "8",
        "--grid-points",
        "10",
        "--instances",
        "1",
        "--seed",
        "5",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("within bound"), "stdout: {text}");
}
