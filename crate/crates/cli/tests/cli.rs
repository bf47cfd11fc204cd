// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn seqar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqar")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn body(path: &Path) -> (String, String) {
    let text = fs::read_to_string(path).unwrap();
    let (head, rest) = text.split_once('\n').unwrap();
    (head.to_string(), rest.to_string())
}

#[test]
fn simulate_writes_stamped_trajectory() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let res = seqar(&["simulate", "--signal", "s1", "--n", "200", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let (head, rest) = body(&out.join("trajectory.csv"));
    assert!(head.starts_with("# config_hash="));
    let hash = head.trim_start_matches("# config_hash=").split(' ').next().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(head.contains(" config={\"command\":\"simulate\""));
    let mut lines = rest.lines();
    assert_eq!(lines.next(), Some("j,x_j,y_j"));
    assert_eq!(lines.count(), 201);
    assert!(!rest.contains('\r'));

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], hash);
    assert_eq!(json["config"]["seed"], 1);
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = seqar(&["simulate", "--signal", "s2", "--n", "300", "--seed", "4", "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", stderr(&res));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn unknown_signal_lists_valid_names() {
    let res = seqar(&["simulate", "--signal", "s7", "--n", "200"]);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr(&res);
    assert!(err.contains("s1") && err.contains("s2") && err.contains("series:<file>"), "{err}");
}

#[test]
fn estimate_writes_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("est");
    let res = seqar(&["estimate", "--signal", "s1", "--n", "500", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stdout(&res).contains("selected k="));
    for name in ["seq_points.csv", "regression.csv", "coefficients.csv", "criterion.csv", "estimate.csv", "estimate.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let (_, crit) = body(&out.join("criterion.csv"));
    assert!(crit.starts_with("alpha,k,t,omega,J\n"));
    let (_, est) = body(&out.join("estimate.csv"));
    assert_eq!(est.lines().count(), 1 + 23);
}

#[test]
fn noiseless_estimate_is_reproducible_and_gated_in() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let res = seqar(&[
            "estimate", "--signal", "s1", "--n", "500", "--seed", seed, "--debug-noiseless", "--format", "json",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
        v
    };
    let a = run("a", "1");
    let b = run("b", "2");
    assert_eq!(a["result"]["gamma_all"], true);
    assert_eq!(a["result"]["estimate"], b["result"]["estimate"]);
    assert!(!dir.path().join("a").join("estimate.csv").exists());
}

#[test]
fn delta_above_limit_is_rejected() {
    let res = seqar(&["estimate", "--n", "500", "--delta", "0.2"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("1/12"));
}

#[test]
fn risk_table_rows_and_rerun_identity() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = seqar(&[
            "risk-table", "--signal", "s1", "--n", "200,500", "--M", "10", "--seed", "3", "--k", "1", "--r", "1",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
        out
    };
    let a = run("a");
    let b = run("b");
    let (_, rows) = body(&a.join("risk_table.csv"));
    assert_eq!(rows.lines().count(), 3);
    for name in ["risk_table.csv", "risk_table.json", "efficiency.csv", "plot_s1_n200_gaussian.csv", "plot_s1_n500_gaussian.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn risk_table_with_all_noises_reports_robust_column() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t");
    let res = seqar(&[
        "risk-table", "--signal", "s1", "--noise", "all", "--n", "200", "--M", "3", "--format", "csv", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let (_, rows) = body(&out.join("risk_table.csv"));
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].ends_with("robust_risk,robust_relative_risk"));
    let robust: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(15).unwrap()).collect();
    assert_eq!(robust[0], robust[1]);
    assert!(!out.join("risk_table.json").exists());
}

#[test]
fn pinsker_values_and_usage_error() {
    let res = seqar(&["pinsker", "--k", "1", "--r", "1"]);
    assert!(res.status.success());
    assert!(stdout(&res).contains("0.423565"));
    let res = seqar(&["pinsker", "--k", "1", "--r", "1", "--signal", "s1"]);
    let text = stdout(&res);
    assert!(text.contains("sigma_star = 0.875000"), "{text}");
    assert!(text.contains("upsilon = 1.093104"), "{text}");
    let res = seqar(&["pinsker", "--k", "1"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("--r"));
}

#[test]
fn beta_recovers_series_signal_from_file() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("signal.toml");
    fs::write(&spec, "type = \"series\"\ncoefficients = [0.0, 0.3, 0.0, 0.0, 0.1]\nstability_eps = 0.4\nlipschitz_l = 5.0\n")
        .unwrap();
    let out = dir.path().join("beta");
    let signal = format!("series:{}", spec.display());
    let res = seqar(&[
        "beta", "--signal", &signal, "--n", "10000", "--debug-noiseless", "--i-max", "16", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let (_, csv) = body(&out.join("beta.csv"));
    let coeffs: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(coeffs.len(), 16);
    assert!((coeffs[1] - 0.3).abs() < 2.0 / 101.0);
    assert!((coeffs[4] - 0.1).abs() < 2.0 / 101.0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("beta.json")).unwrap()).unwrap();
    assert!(json["result"]["coefficient_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("cfg");
    fs::write(&cfg, format!("signal = \"s2\"\nn = 400\nseed = 5\nformat = [\"csv\"]\nout = {:?}\n", out.display().to_string()))
        .unwrap();
    let res = seqar(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "6"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let (head, rest) = body(&out.join("trajectory.csv"));
    assert!(head.contains("\"signal_name\":\"s2\"") && head.contains("\"seed\":6"), "{head}");
    assert_eq!(rest.lines().count(), 402);
    assert!(!out.join("trajectory.json").exists());

    fs::write(&cfg, "sample_size = 3\n").unwrap();
    let res = seqar(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = seqar(&["simulate", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}
