//! Density of the averaged variance from Malliavin weights,
//! `p(x) = E[1{F > x} δ]`, plus the survival-function diagnostics.

use crate::quad::{trapezoid, trapezoid_tail, trapezoid_weights};
use crate::stats::{quantile_sorted, sorted_copy, summarize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMethod {
    Malliavin,
    Kde,
}

impl DensityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            DensityMethod::Malliavin => "malliavin",
            DensityMethod::Kde => "kde",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub x: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub se: Vec<f64>,
    /// Trapezoid mass of `p_hat` over `x`.
    pub normalization: f64,
    pub method: DensityMethod,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DensityError {
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("x grid must be nonempty, finite and nondecreasing")]
    InvalidGrid,
}

/// One path's contribution: averaged variance and its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub value: f64,
    pub weight: f64,
}

fn check_grid(x: &[f64]) -> Result<(), DensityError> {
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] < w[0]) {
        return Err(DensityError::InvalidGrid);
    }
    Ok(())
}

/// Samples ordered by value then weight, so every reduction below sees the
/// same sequence whatever order the ensemble arrived in.
fn canonical(samples: &[WeightedSample]) -> Vec<WeightedSample> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.weight.total_cmp(&b.weight)));
    s
}

/// How the per-path terms are reduced.
///
/// `Plain` is `p̂(x) = (1/N) Σ 1{F_i > x} δ_i`. `Centered` subtracts the
/// zero-mean control `δ_i P̂(F > x)`:
/// `p̂(x) = (1/N) Σ (1{F_i > x} − P̂(F > x)) δ_i`. Both estimate the same
/// density; the centered form is exactly zero outside the sample range and
/// has a much smaller variance where `P̂(F > x)` is near 0 or 1.
///
/// Where only a handful of samples lie on one side of `x`, the centered
/// SE rests on those few terms and understates the error, so density
/// tables use `Plain`. Price quadrature integrates over the whole grid and
/// uses `Centered`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Plain,
    Centered,
}

pub const DENSITY_ESTIMATOR: Estimator = Estimator::Plain;
pub const PRICE_ESTIMATOR: Estimator = Estimator::Centered;

impl Estimator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Plain => "plain",
            Estimator::Centered => "centered",
        }
    }
}

/// Mean and iid SE of `δ_i h_i` (plain) or `δ_i (h_i − h̄)` (centered).
///
/// For the centered form the SE is that of the linearization; the
/// `(mean δ)(mean h − E h)` remainder is second order.
pub fn weighted_mean(weights: &[f64], h: &[f64], estimator: Estimator) -> Estimate {
    let shift = match estimator {
        Estimator::Plain => 0.0,
        Estimator::Centered => crate::stats::mean(h).expect("nonempty"),
    };
    let terms: Vec<f64> = weights.iter().zip(h).map(|(w, v)| w * (v - shift)).collect();
    let sm = summarize(&terms).expect("nonempty");
    Estimate { value: sm.mean, se: sm.se() }
}

/// Density of `F` on `x_grid` from weighted samples.
pub fn estimate_density(
    samples: &[WeightedSample],
    x_grid: &[f64],
    estimator: Estimator,
) -> Result<DensityEstimate, DensityError> {
    if samples.is_empty() {
        return Err(DensityError::EmptyEnsemble);
    }
    check_grid(x_grid)?;
    let sorted = canonical(samples);
    let weights: Vec<f64> = sorted.iter().map(|s| s.weight).collect();
    let mut indicator = vec![0.0; sorted.len()];
    let mut p_hat = Vec::with_capacity(x_grid.len());
    let mut se = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let first_above = sorted.partition_point(|s| s.value <= x);
        indicator[..first_above].fill(0.0);
        indicator[first_above..].fill(1.0);
        let e = weighted_mean(&weights, &indicator, estimator);
        p_hat.push(e.value);
        se.push(e.se);
    }
    let normalization = trapezoid(x_grid, &p_hat);
    Ok(DensityEstimate { x: x_grid.to_vec(), p_hat, se, normalization, method: DensityMethod::Malliavin })
}

/// `∫ f p̂` by the trapezoid rule on `x_grid`, with the exact standard error.
///
/// `p̂` is linear in the samples, so the quadrature is a sample mean of
/// `δ_i H_i` with `H_i = Σ_j w_j f_j 1{F_i > x_j}`.
pub fn quadrature_from_samples(
    samples: &[WeightedSample],
    x_grid: &[f64],
    f: &[f64],
    estimator: Estimator,
) -> Result<Estimate, DensityError> {
    if samples.is_empty() {
        return Err(DensityError::EmptyEnsemble);
    }
    check_grid(x_grid)?;
    let sorted = canonical(samples);
    let tw = trapezoid_weights(x_grid);
    let weights: Vec<f64> = sorted.iter().map(|s| s.weight).collect();
    let h: Vec<f64> = sorted
        .iter()
        .map(|s| {
            let terms: Vec<f64> = (0..x_grid.len()).filter(|&j| s.value > x_grid[j]).map(|j| tw[j] * f[j]).collect();
            crate::stats::pairwise_sum(&terms)
        })
        .collect();
    Ok(weighted_mean(&weights, &h, estimator))
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect()
}

pub const AUTO_GRID_POINTS: usize = 41;

/// Default density grid: from `max(floor, ½·1st percentile)` to
/// `1.2·99th percentile` of the averaged variance.
pub fn auto_grid(values: &[f64], floor: Option<f64>, points: usize) -> Result<Vec<f64>, DensityError> {
    if values.is_empty() {
        return Err(DensityError::EmptyEnsemble);
    }
    let sorted = sorted_copy(values);
    let p1 = quantile_sorted(&sorted, 0.01);
    let p99 = quantile_sorted(&sorted, 0.99);
    let lo = floor.map_or(0.5 * p1, |f| f.max(0.5 * p1));
    let hi = 1.2 * p99;
    if !(hi > lo) {
        return Err(DensityError::InvalidGrid);
    }
    Ok(linspace(lo, hi, points))
}

/// A pointwise estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// `∫_{x_m}^{x_end} p̂` by the trapezoid rule on the grid, for every node
/// `m`, as a sample mean over paths (see [`quadrature_from_samples`]).
pub fn integrated_survival(
    samples: &[WeightedSample],
    x_grid: &[f64],
    estimator: Estimator,
) -> Result<Vec<Estimate>, DensityError> {
    if samples.is_empty() {
        return Err(DensityError::EmptyEnsemble);
    }
    check_grid(x_grid)?;
    let sorted = canonical(samples);
    let weights: Vec<f64> = sorted.iter().map(|s| s.weight).collect();
    let m = x_grid.len();
    let mut columns = vec![Vec::with_capacity(sorted.len()); m];
    let mut indicator = vec![0.0; m];
    for s in &sorted {
        for (ind, &x) in indicator.iter_mut().zip(x_grid) {
            *ind = if s.value > x { 1.0 } else { 0.0 };
        }
        for (col, t) in columns.iter_mut().zip(trapezoid_tail(x_grid, &indicator)) {
            col.push(t);
        }
    }
    Ok(columns.iter().map(|c| weighted_mean(&weights, c, estimator)).collect())
}

/// Empirical `P(a < F ≤ b)` with its binomial standard error.
pub fn empirical_band_probability(values: &[f64], a: f64, b: f64) -> Result<Estimate, DensityError> {
    if values.is_empty() {
        return Err(DensityError::EmptyEnsemble);
    }
    let terms: Vec<f64> = values.iter().map(|&v| if v > a && v <= b { 1.0 } else { 0.0 }).collect();
    let sm = summarize(&terms).expect("nonempty");
    Ok(Estimate { value: sm.mean, se: sm.se() })
}

/// Trapezoid integral of `f·p̂` together with the independent-error SE
/// `√Σ (wᵢ fᵢ seᵢ)²`.
pub fn integrate_against(density: &DensityEstimate, f: &[f64]) -> Estimate {
    let w = trapezoid_weights(&density.x);
    let prod: Vec<f64> = density.p_hat.iter().zip(f).map(|(p, v)| p * v).collect();
    let value = trapezoid(&density.x, &prod);
    let var: f64 = (0..w.len()).map(|i| (w[i] * f[i] * density.se[i]).powi(2)).sum();
    Estimate { value, se: var.sqrt() }
}
