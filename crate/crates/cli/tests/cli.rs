use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};
use tempfile::TempDir;

fn tikfar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tikfar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, regime: &str, n: usize, seed: u64) -> Output {
    tikfar(&[
        "simulate",
        "--regime",
        regime,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(dir),
    ])
}

#[test]
fn simulate_writes_expected_shape() {
    let tmp = TempDir::new().unwrap();
    let out = simulate(tmp.path(), "I", 100, 7);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("sample.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101, "grid header plus 100 curves");
    assert!(lines.iter().all(|l| l.split(',').count() == 101));
    let meta = json(&tmp.path().join("sample.json"));
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["regime"]["label"], "I");
    assert_eq!(meta["seed"], 7);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(simulate(a.path(), "III", 50, 11).status.success());
    assert!(simulate(b.path(), "III", 50, 11).status.success());
    for f in ["sample.csv", "operator.csv", "sample.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn unknown_regime_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = simulate(tmp.path(), "IV", 100, 7);
    assert_eq!(out.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "invalid-argument");
}

fn fit(input: &Path, method: &str, out: &Path) -> Output {
    tikfar(&["fit", "--input", path_str(input), "--method", method, "--out", path_str(out)])
}

#[test]
fn fit_tikhonov_fixed_alpha_has_no_cv_curve() {
    let tmp = TempDir::new().unwrap();
    assert!(simulate(tmp.path(), "II", 120, 3).status.success());
    let out_dir = tmp.path().join("fit");
    let out = fit(&tmp.path().join("sample.csv"), "tikhonov:0.1", &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = json(&out_dir.join("fit.json"));
    assert_eq!(meta["tuning"]["alpha"], 0.1);
    assert!(meta.get("cv").is_none());
    let kernel = std::fs::read_to_string(out_dir.join("kernel.csv")).unwrap();
    assert_eq!(kernel.lines().count(), 102);
}

#[test]
fn fit_tikhonov_cv_reports_the_full_grid() {
    let tmp = TempDir::new().unwrap();
    assert!(simulate(tmp.path(), "I", 200, 5).status.success());
    let out_dir = tmp.path().join("fit");
    let out = fit(&tmp.path().join("sample.csv"), "tikhonov:cv", &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = json(&out_dir.join("fit.json"));
    let curve = meta["cv"]["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 25);
    assert_eq!(meta["cv"]["selected_alpha"], meta["tuning"]["alpha"]);
    let csv = std::fs::read_to_string(out_dir.join("cv_curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
}

/// Curves whose weighted covariance has eigenvalue shares
/// (0.804, 0.091, 0.043, 0.030, 0.012, 0.010, 0.006, 0.004).
fn write_share_sample(path: &Path) {
    let shares: [f64; 8] = [0.804, 0.091, 0.043, 0.030, 0.012, 0.010, 0.006, 0.004];
    let m = 101;
    let points: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let basis = |k: usize, u: f64| -> f64 {
        let f = (k / 2 + 1) as f64;
        if k.is_multiple_of(2) {
            2f64.sqrt() * (2.0 * std::f64::consts::PI * f * u).cos()
        } else {
            2f64.sqrt() * (2.0 * std::f64::consts::PI * f * u).sin()
        }
    };
    // Hadamard-like ±1 score design: the 16 sign patterns of 4 bits, extended
    // to 8 orthogonal columns, each with mean zero.
    let n = 16;
    let sign = |t: usize, k: usize| -> f64 {
        let mask = [1usize, 2, 4, 8, 3, 5, 6, 9][k];
        if (t & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }
    };
    let mut text = points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    text.push('\n');
    for t in 0..n {
        let row: Vec<String> = points
            .iter()
            .map(|&u| {
                (0..8)
                    .map(|k| shares[k].sqrt() * sign(t, k) * basis(k, u))
                    .sum::<f64>()
                    .to_string()
            })
            .collect();
        writeln!(text, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fpca_threshold_resolves_k_from_the_spectrum() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("shares.csv");
    write_share_sample(&input);
    for (tau, k) in [("0.8", 1), ("0.85", 2), ("0.9", 3)] {
        let out_dir = tmp.path().join(tau);
        let out = fit(&input, &format!("fpca:{tau}"), &out_dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out_dir.join("fit.json"))["tuning"]["k"], k, "tau {tau}");
    }
}

#[test]
fn fit_errors_are_machine_readable() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("bad.csv");
    std::fs::write(&input, "0,0.5,1\n1,2\n").unwrap();
    let out = fit(&input, "fpca:0.9", &tmp.path().join("fit"));
    assert_eq!(out.status.code(), Some(1));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "file");

    let out = fit(&input, "pca:3", &tmp.path().join("fit"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn smoke_benchmark_writes_every_table() {
    let tmp = TempDir::new().unwrap();
    let config = configs().join("smoke.toml");
    let out = tikfar(&["benchmark", "--config", path_str(&config), "--out", path_str(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.csv", "timings.csv", "cells.csv", "regret.csv", "worst_case.csv", "tuning.csv", "summary.json"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let records = std::fs::read_to_string(tmp.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 3 * 2 * 6 * 2);
    assert!(records.starts_with("regime,n,method,replication,misfe,tuning,error\n"));
    let meta = json(&tmp.path().join("summary.json"));
    assert!(meta["wall_clock_seconds"].as_f64().unwrap() > 0.0);
    assert!(meta["rate_slope"].is_number());
}

#[test]
fn config_with_unknown_version_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("c.toml");
    std::fs::write(&config, "schema_version = 99\n").unwrap();
    let out = tikfar(&["benchmark", "--config", path_str(&config), "--out", path_str(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_by_default_and_fails_on_the_negative_control() {
    let tmp = TempDir::new().unwrap();
    let out = tikfar(&["verify", "--out", path_str(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&tmp.path().join("verify.json"))["failed"].as_array().unwrap().len(), 0);

    let config = configs().join("verify-negative-control.toml");
    let out = tikfar(&["verify", "--out", path_str(tmp.path()), "--config", path_str(&config)]);
    assert_eq!(out.status.code(), Some(3));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let failures = record["failures"].as_array().unwrap();
    assert!(failures.iter().any(|f| f.as_str().unwrap().starts_with("bias-bound[beta=1,")));
}

#[test]
fn verify_rejects_an_empty_probe_list() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("c.toml");
    std::fs::write(&config, "schema_version = 1\n[verify]\nbetas = []\n").unwrap();
    let out = tikfar(&["verify", "--out", path_str(tmp.path()), "--config", path_str(&config)]);
    assert_eq!(out.status.code(), Some(2));
}

/// Half-hourly winter file with `days` valid days from 2019-10-01, skipping
/// the Dec 28 – Jan 7 window.
fn write_raw(path: &Path, days: usize) {
    let mut text = String::from("date");
    for s in 1..=48 {
        write!(text, ",h{s:02}").unwrap();
    }
    text.push('\n');
    let mut state = 0x9e37_79b9_u64;
    let mut noise = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let mut date = NaiveDate::from_ymd_opt(2019, 10, 1).unwrap();
    let excluded_from = NaiveDate::from_ymd_opt(2019, 12, 28).unwrap();
    let excluded_to = NaiveDate::from_ymd_opt(2020, 1, 7).unwrap();
    let mut level = 0.0;
    let mut written = 0;
    while written < days {
        if date >= excluded_from && date <= excluded_to {
            date = date + Days::new(1);
            continue;
        }
        level = 0.7 * level + noise();
        write!(text, "{date}").unwrap();
        for s in 0..48 {
            let u = (s as f64 + 0.5) / 48.0;
            let root = 5.0 + level * (1.0 + (2.0 * std::f64::consts::PI * u).cos()) + 0.2 * noise();
            write!(text, ",{}", root * root).unwrap();
        }
        text.push('\n');
        written += 1;
        date = date + Days::new(1);
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn rolling_emits_window_arithmetic_counts() {
    let tmp = TempDir::new().unwrap();
    let raw = tmp.path().join("raw.csv");
    write_raw(&raw, 150);
    let out_dir = tmp.path().join("rolling");
    let out = tikfar(&["rolling", "--raw", path_str(&raw), "--out", path_str(&out_dir), "--threads", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let daily = std::fs::read_to_string(out_dir.join("daily_ise.csv")).unwrap();
    let mut lines = daily.lines();
    assert_eq!(lines.next(), Some("date,method,ise,alpha_or_k,refit_flag"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6 * 50);
    for method in ["fpca-80", "fpca-85", "fpca-90", "fpca-95", "fpca-99", "tikhonov-cv"] {
        let mine: Vec<&Vec<&str>> = rows.iter().filter(|r| r[1] == method).collect();
        assert_eq!(mine.len(), 50, "{method}");
        assert_eq!(mine.iter().filter(|r| r[4] == "1").count(), 3, "{method}");
    }

    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("method,evaluated,failed,mean_ise,median_ise,regret_pct")
    );
    let regrets: Vec<f64> = lines.map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(regrets.len(), 6);
    assert_eq!(regrets.iter().copied().fold(f64::INFINITY, f64::min), 0.0);

    let weekday = std::fs::read_to_string(out_dir.join("weekday_means.csv")).unwrap();
    assert_eq!(weekday.lines().count(), 8);
}

#[test]
fn rolling_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let raw = tmp.path().join("raw.csv");
    write_raw(&raw, 130);
    let run = |threads: &str, dir: &str| {
        let out_dir = tmp.path().join(dir);
        let out = tikfar(&[
            "rolling", "--raw", path_str(&raw), "--out", path_str(&out_dir), "--threads", threads,
            "--refit", "7",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("daily_ise.csv")).unwrap()
    };
    assert_eq!(run("1", "a"), run("3", "b"));
}
