use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn svm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ou_config(k: f64, n_paths: usize, strike: f64, density_mode: bool) -> String {
    format!(
        r#"{{
  "model": "ou",
  "params": {{"alpha": 1.0, "k": {k}, "y0": 0.0, "s0": 100.0, "r": 0.05, "mu": 0.05}},
  "vol_family": {{"name": "reference", "c": 0.1, "m": 0.1}},
  "grid": {{"T": 1.0, "n_steps": 64}},
  "ensemble": {{"n_paths": {n_paths}, "seed": 11}},
  "contract": {{"strike": {strike}}},
  "density": {{"mode": {density_mode}}}
}}"#
    )
}

fn cir_config(k: f64, n_paths: usize) -> String {
    format!(
        r#"{{
  "model": "cir",
  "params": {{"b": 1.0, "k": {k}, "z0": 1.0, "s0": 100.0, "r": 0.05}},
  "grid": {{"T": 1.0, "n_steps": 64}},
  "ensemble": {{"n_paths": {n_paths}, "seed": 11}},
  "contract": {{"strike": 100.0}},
  "output": {{"format": "json"}}
}}"#
    )
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a prices.csv as (method, value, ci_lo, ci_hi).
fn price_rows(path: &Path) -> Vec<(String, f64, f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].to_string(), c[1].parse().unwrap(), c[3].parse().unwrap(), c[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn validate_accepts_reference_ou() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.5, 100, 100.0, true));
    let o = svm(&["validate", "--config", s(&c)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("VALID"));
}

#[test]
fn validate_reports_density_condition() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "cir.json", &cir_config(0.5, 100));
    let o = svm(&["validate", "--config", s(&c)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().any(|l| l == "E_DENSITY_CONDITION 6*k^2 >= b"), "{}", stdout(&o));
}

#[test]
fn missing_and_malformed_configs_exit_3() {
    let d = TempDir::new().unwrap();
    let o = svm(&["validate", "--config", s(&d.path().join("absent.json"))]);
    assert_eq!(o.status.code(), Some(3));
    let c = write(&d, "bad.json", "{ not json");
    assert_eq!(svm(&["validate", "--config", s(&c)]).status.code(), Some(3));
    let c = write(&d, "nomodel.json", &ou_config(0.5, 100, 100.0, true).replace(r#""model": "ou""#, r#""model": "heston""#));
    assert_eq!(svm(&["density", "--config", s(&c)]).status.code(), Some(3));
}

#[test]
fn density_on_violating_config_writes_nothing() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "cir.json", &cir_config(0.5, 100));
    let out = d.path().join("out");
    let o = svm(&["density", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = svm(&["price", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn low_sample_warning_and_nan_kde() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.5, 10, 100.0, true));
    let out = d.path().join("out");
    let o = svm(&["density", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).lines().any(|l| l.starts_with("LOW_SAMPLE")));
    let csv = std::fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(csv.lines().count(), 42);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",NaN,NaN")));
}

#[test]
fn density_outputs_and_summary() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.5, 4000, 100.0, true));
    let out = d.path().join("out");
    let o = svm(&["density", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("normalization=") && summary.contains("mean_weight=") && summary.contains("duality_mean_F_delta="));
    let csv = std::fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,p_malliavin,se_malliavin,p_kde,se_kde"));
    assert_eq!(csv.lines().count(), 42);
    let w = std::fs::read_to_string(out.join("weights.csv")).unwrap();
    assert_eq!(w.lines().next(), Some("path_index,avg_variance,weight,denominator"));
    assert_eq!(w.lines().count(), 4001);
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.5, 3000, 100.0, true));
    let mut outputs = Vec::new();
    for t in ["1", "4", "8"] {
        let out = d.path().join(format!("t{t}"));
        assert_eq!(svm(&["density", "--config", s(&c), "--out", s(&out), "--threads", t]).status.code(), Some(0));
        assert_eq!(svm(&["price", "--config", s(&c), "--out", s(&out), "--threads", t]).status.code(), Some(0));
        let files: Vec<Vec<u8>> =
            ["density.csv", "weights.csv", "prices.csv"].iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn seed_flag_overrides_config() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.5, 500, 100.0, true));
    let a = d.path().join("a");
    let b = d.path().join("b");
    svm(&["price", "--config", s(&c), "--out", s(&a)]);
    svm(&["price", "--config", s(&c), "--out", s(&b), "--seed", "12"]);
    assert_ne!(std::fs::read(a.join("prices.csv")).unwrap(), std::fs::read(b.join("prices.csv")).unwrap());
}

#[test]
fn constant_vol_prices_match_black_scholes() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.0, 20000, 100.0, false));
    let out = d.path().join("out");
    let o = svm(&["price", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = price_rows(&out.join("prices.csv"));
    let methods: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(methods, ["mixing_mc", "plain_mc", "martingale_check"]);
    // σ(0) = 0.2 for the reference family; Black-Scholes value recomputed independently
    let oracle = 10.450583572185565;
    assert!((rows[0].1 - oracle).abs() < 1e-9);
    assert!(rows[1].2 <= oracle && oracle <= rows[1].3, "{rows:?}");
}

#[test]
fn zero_strike_prices_equal_spot() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "ou.json", &ou_config(0.5, 4000, 0.0, true));
    let out = d.path().join("out");
    let o = svm(&["price", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = price_rows(&out.join("prices.csv"));
    assert_eq!(rows.len(), 4);
    for (m, _, lo, hi) in rows {
        assert!(lo <= 100.0 && 100.0 <= hi, "{m}: [{lo}, {hi}]");
    }
}

#[test]
fn json_output_format() {
    let d = TempDir::new().unwrap();
    let c = write(&d, "cir.json", &cir_config(0.25, 500));
    let out = d.path().join("out");
    let o = svm(&["price", "--config", s(&c), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("prices.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["method"], "density_quadrature");
    assert!(rows[1]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn selfcheck_subset_passes() {
    let o = svm(&["selfcheck", "--only", "9,12,14"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn corrupted_cdf_fails_selfcheck() {
    let o = svm(&["selfcheck", "--only", "14", "--inject-cdf-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL 14 bs-monotonicity"));
}

#[test]
fn full_selfcheck_passes() {
    let o = svm(&["selfcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 14);
}
