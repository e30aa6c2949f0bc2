//! The four subcommands. Each returns its report lines or a [`Failure`]
//! carrying the exit code; files are written only after every stage has
//! succeeded.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sv_malliavin::battery::{Battery, BatteryConfig, Scale, ACCEPTANCE_CHECKS, MONOTONICITY_CHECK};
use sv_malliavin::density::{DensityEstimate, PRICE_ESTIMATOR};
use sv_malliavin::ensemble::{run_ensemble, EnsembleError, EnsembleResult, PathRecord};
use sv_malliavin::model::ValidationError;
use sv_malliavin::pipeline::{density_run, price_rows, resolve_grid};
use sv_malliavin::pricing::{norm_cdf, PriceEstimate};
use sv_malliavin::report::{density_csv, prices_csv, weights_csv};
use sv_malliavin::stats::KDE_MIN_SAMPLES;

use crate::config::{load, ConfigError, Format, Run};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{failed} of {total} self-checks failed")]
    Selfcheck { failed: usize, total: usize },
    #[error("{0}")]
    Validation(ValidationError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Budget(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Selfcheck { .. } => 1,
            Failure::Validation(_) => 2,
            Failure::Io(_) | Failure::Parse(_) => 3,
            Failure::Budget(_) => 4,
        }
    }

    /// Lines for standard error; validation failures give one violation
    /// per line, code first.
    pub fn report(&self) -> Vec<String> {
        match self {
            Failure::Validation(e) => e.violations.iter().map(|v| v.to_string()).collect(),
            other => vec![format!("error: {other}")],
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            ConfigError::Parse(_) => Failure::Parse(e.to_string()),
            ConfigError::Validation(v) => Failure::Validation(v),
        }
    }
}

impl From<EnsembleError> for Failure {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::Grid(_) => Failure::Parse(e.to_string()),
            _ => Failure::Budget(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

fn log(line: &str) {
    eprintln!("[svm] {line}");
}

fn prepare(config: &Path, ov: &Overrides, density_mode: Option<bool>) -> Result<Run, Failure> {
    let cfg = load(config)?;
    let mut run = cfg.build(density_mode)?;
    if let Some(seed) = ov.seed {
        run.ensemble.seed = seed;
    }
    if let Some(out) = &ov.out {
        run.output.directory = out.clone();
    }
    Ok(run)
}

fn simulate(run: &Run, ov: &Overrides) -> Result<EnsembleResult, Failure> {
    let e = &run.ensemble;
    log(&format!(
        "simulating {} {} paths x {} steps (seed {}{})",
        e.n_paths,
        run.model.tag().as_str(),
        e.n_steps,
        e.seed,
        if e.compute_weights { ", with weights" } else { "" }
    ));
    if e.n_paths < KDE_MIN_SAMPLES {
        eprintln!(
            "LOW_SAMPLE n_paths={} < {KDE_MIN_SAMPLES}: KDE columns are NaN and standard errors are unreliable",
            e.n_paths
        );
    }
    let result = run_ensemble(&run.model, &run.ensemble, ov.threads)?;
    if !result.failures.is_empty() {
        log(&format!("{} paths failed within budget; first: {}", result.failures.len(), result.failures[0].reason));
    }
    Ok(result)
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        log(&format!("wrote {}", path.display()));
    }
    Ok(())
}

fn num(x: f64) -> Value {
    // NaN and infinities become null
    json!(x)
}

fn density_json(m: &DensityEstimate, kde: Option<&DensityEstimate>) -> String {
    let rows: Vec<Value> = (0..m.x.len())
        .map(|i| {
            let (pk, sk) = kde.map_or((f64::NAN, f64::NAN), |k| (k.p_hat[i], k.se[i]));
            json!({"x": num(m.x[i]), "p_malliavin": num(m.p_hat[i]), "se_malliavin": num(m.se[i]), "p_kde": num(pk), "se_kde": num(sk)})
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
}

fn weights_json(records: &[PathRecord]) -> String {
    let rows: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({"path_index": r.path_index, "avg_variance": num(r.avg_variance), "weight": num(r.weight), "denominator": num(r.denominator)})
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
}

fn prices_json(prices: &[PriceEstimate]) -> String {
    let rows: Vec<Value> = prices
        .iter()
        .map(|p| {
            json!({"method": p.method.as_str(), "value": num(p.value), "se": num(p.std_error), "ci_lo": num(p.ci95.0), "ci_hi": num(p.ci95.1)})
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("serializable") + "\n"
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn validate(config: &Path) -> Result<Vec<String>, Failure> {
    let cfg = load(config)?;
    let run = cfg.build(None)?;
    let mut out = vec!["VALID".to_string()];
    if !run.model.density_ready() {
        out.push("NOTE density mode off: density command unavailable, price omits the density row".into());
    }
    Ok(out)
}

pub fn density(config: &Path, ov: &Overrides) -> Result<Vec<String>, Failure> {
    let run = prepare(config, ov, Some(true))?;
    let ensemble = simulate(&run, ov)?;
    let grid = resolve_grid(run.x_grid, &run.model, &ensemble).map_err(|e| Failure::Parse(format!("density.x_grid: {e}")))?;
    log(&format!("estimating density on {} points ({} estimator)", grid.len(), run.estimator.as_str()));
    let d = density_run(&ensemble, &grid, run.estimator).map_err(|e| Failure::Budget(e.to_string()))?;
    let f = run.output.format;
    let (dens, weights) = match f {
        Format::Csv => (density_csv(&d.malliavin, d.kde.as_ref()), weights_csv(&ensemble.records)),
        Format::Json => (density_json(&d.malliavin, d.kde.as_ref()), weights_json(&ensemble.records)),
    };
    write_all(&run.output.directory, &[(format!("density.{}", ext(f)), dens), (format!("weights.{}", ext(f)), weights)])?;
    Ok(vec![format!(
        "normalization={:.6} mean_weight={:.6} (se {:.6}) duality_mean_F_delta={:.6} (se {:.6})",
        d.malliavin.normalization, d.mean_weight.value, d.mean_weight.se, d.duality.value, d.duality.se
    )])
}

pub fn price(config: &Path, ov: &Overrides) -> Result<Vec<String>, Failure> {
    let mut run = prepare(config, ov, None)?;
    let with_density = run.model.density_ready();
    run.ensemble.compute_weights = with_density;
    let ensemble = simulate(&run, ov)?;
    let grid = if with_density {
        Some(resolve_grid(run.x_grid, &run.model, &ensemble).map_err(|e| Failure::Parse(format!("density.x_grid: {e}")))?)
    } else {
        log("density row omitted: model is not in density mode");
        None
    };
    let rows = price_rows(&run.model, &ensemble, &run.contract, grid.as_deref(), PRICE_ESTIMATOR)
        .map_err(|e| Failure::Budget(e.to_string()))?;
    let f = run.output.format;
    let body = match f {
        Format::Csv => prices_csv(&rows),
        Format::Json => prices_json(&rows),
    };
    write_all(&run.output.directory, &[(format!("prices.{}", ext(f)), body)])?;
    Ok(rows.iter().map(|p| format!("{} {:.6} se {:.6}", p.method.as_str(), p.value, p.std_error)).collect())
}

#[derive(Debug, Clone, Default)]
pub struct SelfcheckOptions {
    pub desk: bool,
    pub only: Vec<u8>,
    pub inject_cdf_fault: bool,
}

fn corrupted_cdf(x: f64) -> f64 {
    norm_cdf(-x)
}

pub fn selfcheck(ov: &Overrides, opts: &SelfcheckOptions) -> Result<Vec<String>, Failure> {
    let mut cfg = BatteryConfig::new(if opts.desk { Scale::Desk } else { Scale::Reduced });
    cfg.threads = ov.threads;
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if opts.inject_cdf_fault {
        cfg.cdf = corrupted_cdf;
    }
    let ids: Vec<u8> = if opts.only.is_empty() {
        ACCEPTANCE_CHECKS.iter().copied().chain([MONOTONICITY_CHECK]).collect()
    } else {
        opts.only.clone()
    };
    log(&format!("self-check at {} scale, seed {}", if opts.desk { "desk" } else { "reduced" }, cfg.seed));
    let battery = Battery::new(cfg);
    let mut failed = 0;
    for id in &ids {
        let o = battery.run(*id);
        if !o.passed {
            failed += 1;
        }
        println!("{o}");
    }
    if failed > 0 {
        Err(Failure::Selfcheck { failed, total: ids.len() })
    } else {
        Ok(vec![format!("all {} checks passed", ids.len())])
    }
}
