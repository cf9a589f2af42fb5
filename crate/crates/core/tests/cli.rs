use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_qc");
const PARAMS: &str = r#""params": {"Lambda": 20, "mu": 12, "R": 15, "c": 8}, "utility": {"kind": "cara", "r": 0.5}"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let output = Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("spawn qc");
    let text = String::from_utf8_lossy(&output.stdout).into_owned() + &String::from_utf8_lossy(&output.stderr);
    (output.status.code().unwrap_or(-1), text)
}

#[test]
fn range_with_fixed_price() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &format!(r#"{{"command": "range", {PARAMS}, "fixed": {{"p": 10}}}}"#));
    let (code, _) = run("range", &cfg, tmp.path(), &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(tmp.path().join("range.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert!((cols[0].parse::<f64>().unwrap() - 7.64).abs() < 0.01, "{row}");
    assert_eq!(&cols[1..], ["12", "closed", "open"]);
}

#[test]
fn equilibrium_writes_table_and_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &format!(r#"{{"command": "equilibrium", {PARAMS}, "policy": {{"d": 0.5, "p": 10, "l": 4.5}}}}"#),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("equilibrium", &cfg, &a, &[]).0, 0);
    assert_eq!(run("equilibrium", &cfg, &b, &[]).0, 0);
    let first = fs::read(a.join("equilibrium.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("equilibrium.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.lines().next().unwrap().starts_with("d,p,l,kind,lambda"));
    assert!(text.contains("9.7305"), "{text}");
}

#[test]
fn no_equilibrium_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    // full compensation at a low price: K stays positive up to the service rate
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "equilibrium", "params": {"Lambda": 20, "mu": 12, "R": 15, "c": 8},
            "utility": {"kind": "cara", "r": 0.5}, "policy": {"d": 0.1, "p": 1, "l": 8}}"#,
    );
    let (code, text) = run("equilibrium", &cfg, tmp.path(), &[]);
    assert_eq!(code, 3, "{text}");
}

#[test]
fn config_problems_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let unknown = write_config(tmp.path(), "u.json", &format!(r#"{{"command": "range", {PARAMS}, "fixed": {{"p": 10}}, "bogus": 1}}"#));
    assert_eq!(run("range", &unknown, tmp.path(), &[]).0, 2);

    let mismatch = write_config(tmp.path(), "m.json", &format!(r#"{{"command": "range", {PARAMS}, "fixed": {{"p": 10}}}}"#));
    assert_eq!(run("curve", &mismatch, tmp.path(), &[]).0, 2);

    let bad_params = write_config(
        tmp.path(),
        "b.json",
        r#"{"command": "range", "params": {"Lambda": 20, "mu": -1, "R": 15, "c": 8},
            "utility": {"kind": "cara", "r": 0.5}, "fixed": {"p": 10}}"#,
    );
    assert_eq!(run("range", &bad_params, tmp.path(), &[]).0, 2);

    let missing = Command::new(BIN).arg("range").output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn off_equilibrium_simulation_exits_with_four() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "simulate", "params": {"Lambda": 20, "mu": 12, "R": 15, "c": 8},
            "utility": {"kind": "cara", "r": 0.1}, "policy": {"d": 0.5, "p": 10, "l": 4.5},
            "sim": {"n_customers": 100000, "lambda_offset": 0.5}}"#,
    );
    let (code, text) = run("simulate", &cfg, tmp.path(), &["--seed", "7"]);
    assert_eq!(code, 4, "{text}");
    assert!(tmp.path().join("simulate_summary.csv").exists());
}

#[test]
fn epsopt_underflow_is_a_warning() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &format!(r#"{{"command": "epsopt", {PARAMS}, "epsilon": 1e-12}}"#));
    let (code, text) = run("epsopt", &cfg, tmp.path(), &[]);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(tmp.path().join("epsopt.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with("underflow"), "{csv}");
}

#[test]
fn curve_writes_one_file_per_rate_and_a_plot() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &format!(r#"{{"command": "curve", {PARAMS}, "fixed": {{"p": 10}}, "lambdas": [5, 9.5], "curve_points": 40}}"#),
    );
    let plot = tmp.path().join("curve.svg");
    let (code, text) = run("curve", &cfg, tmp.path(), &["--plot", plot.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let files: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("curve_p"))
        .collect();
    // λ = 5 lies below the compensation-free rate and is skipped
    assert_eq!(files.len(), 1, "{files:?}");
    let body = fs::read_to_string(tmp.path().join(&files[0])).unwrap();
    assert_eq!(body.lines().count(), 41);
    assert_eq!(body.lines().filter(|l| l.ends_with(",1")).count(), 1);
    assert!(fs::read_to_string(plot).unwrap().contains("<svg"));
}
