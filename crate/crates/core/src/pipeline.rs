//! End-to-end stages shared by the command-line tool and the self-check:
//! grid resolution, density tables and the price rows.

use crate::density::{auto_grid, estimate_density, linspace, DensityError, DensityEstimate, Estimate, Estimator, AUTO_GRID_POINTS};
use crate::ensemble::{EnsembleResult, ModelSpec};
use crate::model::Contract;
use crate::pricing::{martingale_check, price_from_samples, price_mixing, price_plain_mc, PriceEstimate, PricingError};
use crate::stats::{kde_density, summarize, KDE_MIN_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Auto,
    Explicit { min: f64, max: f64, points: usize },
}

pub fn resolve_grid(spec: GridSpec, model: &ModelSpec, ensemble: &EnsembleResult) -> Result<Vec<f64>, DensityError> {
    match spec {
        GridSpec::Auto => auto_grid(&ensemble.avg_variances(), model.variance_floor(), AUTO_GRID_POINTS),
        GridSpec::Explicit { min, max, points } => {
            if !(min < max) || points < 2 || !min.is_finite() || !max.is_finite() {
                return Err(DensityError::InvalidGrid);
            }
            Ok(linspace(min, max, points))
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityRun {
    pub malliavin: DensityEstimate,
    /// Absent below the KDE sample minimum.
    pub kde: Option<DensityEstimate>,
    pub mean_weight: Estimate,
    /// `mean(F·δ)`, which should be 1.
    pub duality: Estimate,
}

fn estimate_of(values: &[f64]) -> Estimate {
    let s = summarize(values).expect("nonempty ensemble");
    Estimate { value: s.mean, se: s.se() }
}

pub fn density_run(ensemble: &EnsembleResult, x_grid: &[f64], estimator: Estimator) -> Result<DensityRun, DensityError> {
    let samples = ensemble.weighted_samples();
    let malliavin = estimate_density(&samples, x_grid, estimator)?;
    let values = ensemble.avg_variances();
    let kde = if values.len() >= KDE_MIN_SAMPLES { kde_density(&values, x_grid).ok() } else { None };
    let weights = ensemble.weights();
    let fd: Vec<f64> = samples.iter().map(|s| s.value * s.weight).collect();
    Ok(DensityRun { malliavin, kde, mean_weight: estimate_of(&weights), duality: estimate_of(&fd) })
}

/// Price rows: density quadrature (when `x_grid` is given), mixing, plain
/// Monte Carlo and the martingale check.
pub fn price_rows(
    model: &ModelSpec,
    ensemble: &EnsembleResult,
    contract: &Contract,
    x_grid: Option<&[f64]>,
    estimator: Estimator,
) -> Result<Vec<PriceEstimate>, PricingError> {
    let m = model.market();
    let mut rows = Vec::with_capacity(4);
    if let Some(x) = x_grid {
        rows.push(price_from_samples(&ensemble.weighted_samples(), x, estimator, contract, &m)?);
    }
    rows.push(price_mixing(&ensemble.avg_variances(), contract, &m)?);
    let assets = ensemble.terminal_assets();
    rows.push(price_plain_mc(&assets, contract, &m)?);
    rows.push(martingale_check(&assets, &m)?);
    Ok(rows)
}
