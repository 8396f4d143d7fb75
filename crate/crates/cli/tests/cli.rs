use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn war(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_war"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = war(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

const SIM: &[&str] = &[
    "simulate", "--beta", "0.825,-0.1875,0.0125", "--innovation", "sin", "--eta-sd", "1",
    "--delta-bound", "0.2", "--n", "1000", "--burn-in", "1000", "--grid", "100", "--seed", "7",
];

fn simulated(dir: &TempDir, name: &str) -> PathBuf {
    let mut args = SIM.to_vec();
    args.extend(["--output", name]);
    ok(dir.path(), &args);
    dir.path().join(name)
}

#[test]
fn simulate_writes_series_and_manifest() {
    let dir = TempDir::new().unwrap();
    let a = simulated(&dir, "a.csv");
    let b = simulated(&dir, "b.csv");
    assert_eq!(rows(&a).len(), 1001);
    assert!(rows(&a)[0].starts_with("s,"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["flags"]["n"], 1000);
    assert!(manifest["version"].is_string() && manifest["wall_time_secs"].is_number());
}

#[test]
fn manifest_argv_reproduces_output() {
    let dir = TempDir::new().unwrap();
    let first = simulated(&dir, "first.csv");
    let text = fs::read_to_string(dir.path().join("first.csv.manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut argv: Vec<String> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let pos = argv.iter().position(|a| a == "--output").unwrap();
    argv[pos + 1] = "again.csv".into();
    let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
    ok(dir.path(), &refs);
    assert_eq!(fs::read(first).unwrap(), fs::read(dir.path().join("again.csv")).unwrap());
}

fn write_raw(dir: &Path, days: usize, per_day: usize) -> PathBuf {
    let mut text = String::new();
    for d in 0..days {
        text.push_str(&format!("day{d}"));
        for k in 0..per_day {
            // deterministic, spread-out values
            let x = ((k * 37 + d * 11) % 101) as f64 / 50.0 - 1.0 + 0.01 * d as f64;
            text.push_str(&format!(",{x}"));
        }
        text.push('\n');
    }
    let p = dir.join("raw.csv");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn densify_shapes_and_determinism() {
    let dir = TempDir::new().unwrap();
    write_raw(dir.path(), 305, 78);
    ok(dir.path(), &["densify", "--input", "raw.csv", "--output", "s1.csv"]);
    ok(dir.path(), &["densify", "--input", "raw.csv", "--output", "s2.csv"]);
    let r = rows(&dir.path().join("s1.csv"));
    assert_eq!(r.len(), 306);
    assert!(r[1].starts_with("day0,"));
    assert_eq!(fs::read(dir.path().join("s1.csv")).unwrap(), fs::read(dir.path().join("s2.csv")).unwrap());

    write_raw(dir.path(), 1, 78);
    ok(dir.path(), &["densify", "--input", "raw.csv", "--output", "one.csv", "--bandwidth", "0.2"]);
    assert_eq!(rows(&dir.path().join("one.csv")).len(), 2);
}

#[test]
fn densify_skips_short_rows() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("raw.csv"), "a,1,2,3,5\nb,4\nc,0,1,1.5\n").unwrap();
    let out = ok(dir.path(), &["densify", "--input", "raw.csv", "--output", "s.csv", "--clip", "0:4"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 'b'"));
    let labels: Vec<String> = rows(&dir.path().join("s.csv"))
        .iter()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(labels, vec!["a", "c"]);
}

#[test]
fn constant_series_forecasts_the_mean() {
    let dir = TempDir::new().unwrap();
    let s: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let header: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    let mut text = format!("s,{}\n", header.join(","));
    for t in 0..30 {
        text.push_str(&format!("{t},{}\n", header.join(",")));
    }
    fs::write(dir.path().join("const.csv"), text).unwrap();
    ok(dir.path(), &["fit", "--input", "const.csv", "--order", "1", "--output", "fit.json"]);
    ok(dir.path(), &["forecast", "--fit", "fit.json", "--input", "const.csv", "--steps", "1", "--output", "fc.csv"]);
    let r = rows(&dir.path().join("fc.csv"));
    assert_eq!(r.len(), 2);
    let u: Vec<f64> = r[0].split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    let f: Vec<f64> = r[1].split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(r[1].starts_with("step_1,"));
    // mean is U[0.01, 0.99] with linear tails: flat at 1 inside
    for (x, y) in u.iter().zip(&f) {
        if (0.05..0.95).contains(x) {
            assert!((y - 1.0).abs() < 0.02, "f({x}) = {y}");
        }
    }
}

#[test]
fn fit_forecast_acf_on_simulated_data() {
    let dir = TempDir::new().unwrap();
    simulated(&dir, "sim.csv");
    ok(dir.path(), &["fit", "--input", "sim.csv", "--order", "3", "--output", "fit.json"]);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    for key in ["order", "beta", "grid", "mean_quantile", "lambda_traces", "sigma2_eps", "k1", "k2", "psi", "asym_cov", "causal"] {
        assert!(!fit[key].is_null(), "{key}");
    }
    assert_eq!(fit["beta"].as_array().unwrap().len(), 3);
    ok(
        dir.path(),
        &["forecast", "--fit", "fit.json", "--input", "sim.csv", "--steps", "4", "--output", "fc.csv", "--cdf-output", "cdf.csv"],
    );
    assert_eq!(rows(&dir.path().join("fc.csv")).len(), 5);
    assert_eq!(rows(&dir.path().join("cdf.csv")).len(), 5);
    assert!(dir.path().join("cdf.csv.manifest.json").exists());

    ok(dir.path(), &["acf", "--input", "sim.csv", "--max-lag", "4", "--ci", "--order", "3", "--output", "acf.csv"]);
    let acf = rows(&dir.path().join("acf.csv"));
    assert_eq!(acf[0], "lag,acf,lower,upper");
    assert_eq!(acf.len(), 6);

    ok(dir.path(), &["fit", "--input", "sim.csv", "--model", "ffwar", "--fraction", "0.9", "--output", "ff.json"]);
    ok(dir.path(), &["forecast", "--fit", "ff.json", "--input", "sim.csv", "--steps", "2", "--output", "ff.csv"]);
    assert_eq!(rows(&dir.path().join("ff.csv")).len(), 3);
}

#[test]
fn backtest_table_covers_the_grid() {
    let dir = TempDir::new().unwrap();
    simulated(&dir, "sim.csv");
    let out = ok(
        dir.path(),
        &["backtest", "--input", "sim.csv", "--orders", "1:10", "--windows", "20,62", "--metric", "kld", "--jobs", "2", "--output", "bt.csv"],
    );
    let table = rows(&dir.path().join("bt.csv"));
    assert_eq!(table[0], "method,p,K,R,score");
    assert_eq!(table.len(), 21);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["metric"], "kld");
    assert!(summary["p"].as_u64().unwrap() >= 1);
}

#[test]
fn montecarlo_reports_replicates() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &["montecarlo", "--beta", "0.5", "--innovation", "constant", "--n", "200", "--replicates", "20", "--seed", "3", "--output", "mc.csv"],
    );
    assert_eq!(rows(&dir.path().join("mc.csv")).len(), 21);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["succeeded"], 20);
    assert!(summary["coefficients"][0]["bias"].as_f64().unwrap().abs() < 0.1);
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), "beta = \"0.5\"\nn = 5\nseed = 2\nburn_in = 10\noutput = \"cfg.csv\"\n").unwrap();
    ok(dir.path(), &["simulate", "--config", "run.toml", "--n", "7"]);
    assert_eq!(rows(&dir.path().join("cfg.csv")).len(), 8);
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn exit_codes_and_error_json() {
    let dir = TempDir::new().unwrap();
    let usage = war(dir.path(), &["simulate", "--n", "3"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_json(&usage)["error"], "usage");

    let missing = war(dir.path(), &["fit", "--input", "nope.csv", "--output", "f.json"]);
    assert_eq!(missing.status.code(), Some(3));

    let noncausal = war(dir.path(), &["simulate", "--beta", "1.1", "--n", "10", "--output", "x.csv"]);
    assert_eq!(noncausal.status.code(), Some(4));
    assert_eq!(error_json(&noncausal)["error"], "non-causal");

    fs::write(dir.path().join("bad.csv"), "s,0.2,0.8\n0,1,0\n").unwrap();
    let bad = war(dir.path(), &["fit", "--input", "bad.csv", "--output", "f.json"]);
    assert_eq!(bad.status.code(), Some(3));
    assert_eq!(error_json(&bad)["error"], "invalid-quantile");

    assert!(war(dir.path(), &["--help"]).status.success());
}
