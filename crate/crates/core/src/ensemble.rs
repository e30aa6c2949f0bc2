//! Ensemble orchestration: per-path simulation and weights, parallel over
//! path indices.
//!
//! Each path is a pure function of `(seed, path_index)` and results are
//! collected in index order, so the ensemble does not depend on the number
//! of worker threads.

use rayon::prelude::*;

use crate::density::WeightedSample;
use crate::grid::{GridError, TimeGrid};
use crate::malliavin_cir::cir_weight;
use crate::malliavin_ou::ou_weight;
use crate::model::{ValidatedCirModel, ValidatedOuModel};
use crate::path::{sample_terminal_asset, simulate_cir_path, simulate_ou_path, ModelTag, PathBundle};
use crate::pricing::MarketInputs;
use crate::rng::{NoiseStream, Purpose};
use crate::stats::winsorize;

/// Largest admissible fraction of failed paths.
pub const FAILURE_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Ou(ValidatedOuModel),
    Cir(ValidatedCirModel),
}

impl ModelSpec {
    pub fn tag(&self) -> ModelTag {
        match self {
            ModelSpec::Ou(_) => ModelTag::Ou,
            ModelSpec::Cir(_) => ModelTag::Cir,
        }
    }

    pub fn market(&self) -> MarketInputs {
        match self {
            ModelSpec::Ou(m) => {
                let p = m.params();
                MarketInputs { s0: p.s0, r: p.r, maturity: p.maturity }
            }
            ModelSpec::Cir(m) => {
                let p = m.params();
                MarketInputs { s0: p.s0, r: p.r, maturity: p.maturity }
            }
        }
    }

    pub fn density_ready(&self) -> bool {
        match self {
            ModelSpec::Ou(m) => m.density_ready(),
            ModelSpec::Cir(m) => m.density_ready(),
        }
    }

    /// Almost-sure lower bound of the averaged variance, when one is known.
    pub fn variance_floor(&self) -> Option<f64> {
        match self {
            ModelSpec::Ou(m) => Some(m.vol().lower_bound_c * m.vol().lower_bound_c),
            ModelSpec::Cir(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Clamp weights to their `[q, 1 − q]` quantiles.
    pub winsorize: Option<f64>,
    pub compute_weights: bool,
    pub sample_asset: bool,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self { n_paths, n_steps, seed, antithetic: false, winsorize: None, compute_weights: true, sample_asset: true }
    }
}

/// Per-path output. Fields that were not requested are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub path_index: u64,
    pub avg_variance: f64,
    /// `Y_T` or `Z_T`.
    pub terminal_state: f64,
    pub weight: f64,
    /// `G` (OU) or `I` (CIR).
    pub denominator: f64,
    pub terminal_asset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub path_index: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub tag: ModelTag,
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_paths: usize,
    /// Successful paths in index order.
    pub records: Vec<PathRecord>,
    pub failures: Vec<PathFailure>,
}

impl EnsembleResult {
    pub fn avg_variances(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.avg_variance).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.weight).collect()
    }

    pub fn terminal_states(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.terminal_state).collect()
    }

    pub fn terminal_assets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.terminal_asset).collect()
    }

    pub fn weighted_samples(&self) -> Vec<WeightedSample> {
        self.records.iter().map(|r| WeightedSample { value: r.avg_variance, weight: r.weight }).collect()
    }

    /// Failures caused by a non-positive `G` or `I`.
    pub fn denominator_failures(&self) -> usize {
        self.failures.iter().filter(|f| f.reason.starts_with("non-positive denominator")).count()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("weights requested but the model is not in density mode")]
    NotDensityReady,
    #[error("{failed} of {total} paths failed (budget 0.1%); first: {first}")]
    FailureBudgetExceeded { failed: usize, total: usize, first: String },
    #[error("empty ensemble")]
    Empty,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn stream(cfg: &EnsembleConfig, index: u64, purpose: Purpose) -> NoiseStream {
    if cfg.antithetic {
        NoiseStream::antithetic(cfg.seed, index, purpose)
    } else {
        NoiseStream::new(cfg.seed, index, purpose)
    }
}

fn finish(path: &PathBundle, index: u64, weight: Option<(f64, f64)>, asset: f64) -> PathRecord {
    let (weight, denominator) = weight.unwrap_or((f64::NAN, f64::NAN));
    PathRecord {
        path_index: index,
        avg_variance: path.avg_variance,
        terminal_state: *path.states.last().expect("nonempty path"),
        weight,
        denominator,
        terminal_asset: asset,
    }
}

/// Simulates path `index` of the ensemble.
pub fn simulate_record(model: &ModelSpec, grid: &TimeGrid, cfg: &EnsembleConfig, index: u64) -> Result<PathRecord, String> {
    let mut vol = stream(cfg, index, Purpose::VolatilityDriver);
    let (path, weight) = match model {
        ModelSpec::Ou(m) => {
            let path = simulate_ou_path(m, grid, &mut vol);
            let w = if cfg.compute_weights {
                let w = ou_weight(&path, m).map_err(|e| e.to_string())?;
                Some((w.delta_bar, w.g_denominator))
            } else {
                None
            };
            (path, w)
        }
        ModelSpec::Cir(m) => {
            let path = simulate_cir_path(m, grid, &mut vol).map_err(|e| e.to_string())?;
            let w = if cfg.compute_weights {
                let w = cir_weight(&path, m).map_err(|e| e.to_string())?;
                Some((w.delta_tilde, w.i_denominator))
            } else {
                None
            };
            (path, w)
        }
    };
    let asset = if cfg.sample_asset {
        let mkt = model.market();
        sample_terminal_asset(&path, mkt.s0, mkt.r, &mut stream(cfg, index, Purpose::AssetDriver))
    } else {
        f64::NAN
    };
    Ok(finish(&path, index, weight, asset))
}

/// Runs the ensemble on `threads` workers (`None`: one per core).
pub fn run_ensemble(model: &ModelSpec, cfg: &EnsembleConfig, threads: Option<usize>) -> Result<EnsembleResult, EnsembleError> {
    if cfg.n_paths == 0 {
        return Err(EnsembleError::Empty);
    }
    if cfg.compute_weights && !model.density_ready() {
        return Err(EnsembleError::NotDensityReady);
    }
    let grid = TimeGrid::new(model.market().maturity, cfg.n_steps)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| EnsembleError::ThreadPool(e.to_string()))?;
    let outcomes: Vec<Result<PathRecord, String>> = pool.install(|| {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| simulate_record(model, &grid, cfg, i))
            .collect()
    });
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => records.push(r),
            Err(reason) => failures.push(PathFailure { path_index: i as u64, reason }),
        }
    }
    if failures.len() as f64 > FAILURE_BUDGET * cfg.n_paths as f64 {
        return Err(EnsembleError::FailureBudgetExceeded {
            failed: failures.len(),
            total: cfg.n_paths,
            first: failures[0].reason.clone(),
        });
    }
    if records.is_empty() {
        return Err(EnsembleError::Empty);
    }
    if let (Some(q), true) = (cfg.winsorize, cfg.compute_weights) {
        let mut w: Vec<f64> = records.iter().map(|r| r.weight).collect();
        winsorize(&mut w, q);
        for (r, v) in records.iter_mut().zip(w) {
            r.weight = v;
        }
    }
    Ok(EnsembleResult { tag: model.tag(), grid, seed: cfg.seed, n_paths: cfg.n_paths, records, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn ou() -> ModelSpec {
        let p = OuParams { alpha: 1.0, k: 0.5, y0: 0.0, s0: 100.0, r: 0.05, mu: 0.05, maturity: 1.0 };
        ModelSpec::Ou(validate_ou(p, reference_vol_family(0.1, 0.1).unwrap(), true).unwrap())
    }

    fn cir() -> ModelSpec {
        let p = CirParams { b: 1.0, k: 0.25, z0: 1.0, s0: 100.0, r: 0.05, mu: 0.05, maturity: 1.0 };
        ModelSpec::Cir(validate_cir(p, true).unwrap())
    }

    #[test]
    fn thread_count_does_not_change_samples() {
        for m in [ou(), cir()] {
            let cfg = EnsembleConfig::new(300, 32, 11);
            let a = run_ensemble(&m, &cfg, Some(1)).unwrap();
            let b = run_ensemble(&m, &cfg, Some(8)).unwrap();
            assert_eq!(a.records, b.records);
        }
    }

    #[test]
    fn single_path_ensemble() {
        let r = run_ensemble(&ou(), &EnsembleConfig::new(1, 16, 0), Some(1)).unwrap();
        assert_eq!(r.records.len(), 1);
        let s = crate::stats::summarize(&r.weights()).unwrap();
        assert_eq!(s.std_error, None);
    }

    #[test]
    fn empty_and_not_density_ready() {
        assert_eq!(run_ensemble(&ou(), &EnsembleConfig::new(0, 16, 0), None).unwrap_err(), EnsembleError::Empty);
        let p = OuParams { alpha: 1.0, k: 0.0, y0: 0.0, s0: 100.0, r: 0.05, mu: 0.05, maturity: 1.0 };
        let m = ModelSpec::Ou(validate_ou(p, reference_vol_family(0.1, 0.1).unwrap(), false).unwrap());
        assert_eq!(run_ensemble(&m, &EnsembleConfig::new(4, 16, 0), None).unwrap_err(), EnsembleError::NotDensityReady);
        let mut cfg = EnsembleConfig::new(4, 16, 0);
        cfg.compute_weights = false;
        let r = run_ensemble(&m, &cfg, None).unwrap();
        assert!(r.records[0].weight.is_nan());
    }

    #[test]
    fn antithetic_pairs_share_noise() {
        let mut cfg = EnsembleConfig::new(4, 16, 3);
        cfg.antithetic = true;
        let r = run_ensemble(&ou(), &cfg, Some(2)).unwrap();
        // y0 = 0 so the OU states of a pair are exact negatives
        assert_eq!(r.records[0].terminal_state, -r.records[1].terminal_state);
    }

    #[test]
    fn winsorize_clamps_weights() {
        let mut cfg = EnsembleConfig::new(400, 16, 3);
        let raw = run_ensemble(&ou(), &cfg, None).unwrap().weights();
        cfg.winsorize = Some(0.05);
        let w = run_ensemble(&ou(), &cfg, None).unwrap().weights();
        let max_raw = raw.iter().cloned().fold(f64::MIN, f64::max);
        let max_w = w.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max_w < max_raw);
    }
}
