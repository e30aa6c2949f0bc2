//! European call prices: the conditional Black-Scholes formula and three
//! estimators built on it.
//!
//! Given the volatility path, `log S_T` is Gaussian with variance `σ̄²T`, so
//!
//! ```text
//! V = e^{-rT} E[ E(σ̄) ],   E(σ̄) = s0 e^{rT} Φ(d₁) − K Φ(d₂)
//! ```
//!
//! which can be averaged over paths (mixing), integrated against the density
//! of `σ̄²` (quadrature), or bypassed by sampling `S_T` (plain Monte Carlo).

use crate::density::{estimate_density, integrate_against, quadrature_from_samples, DensityEstimate, Estimator, WeightedSample};
use crate::model::Contract;
use crate::stats::{summarize, StatsError, Summary};

/// Standard normal CDF, `Φ(x) = ½ erfc(−x/√2)`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub type CdfFn = fn(f64) -> f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketInputs {
    pub s0: f64,
    pub r: f64,
    pub maturity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPrice {
    /// `E(σ̄)`, undiscounted.
    pub inner: f64,
    pub discounted: f64,
}

pub fn bs_conditional(sigma_bar: f64, contract: &Contract, m: &MarketInputs) -> ConditionalPrice {
    bs_conditional_with(norm_cdf, sigma_bar, contract, m)
}

/// Same as [`bs_conditional`] with a caller-supplied `Φ`.
pub fn bs_conditional_with(cdf: CdfFn, sigma_bar: f64, contract: &Contract, m: &MarketInputs) -> ConditionalPrice {
    let forward = m.s0 * (m.r * m.maturity).exp();
    let k = contract.strike;
    let sd = sigma_bar * m.maturity.sqrt();
    if k == 0.0 {
        // the call is the asset itself; avoid the e^{rT} e^{-rT} round trip
        return ConditionalPrice { inner: forward, discounted: m.s0 };
    }
    let inner = if sd == 0.0 {
        (forward - k).max(0.0)
    } else {
        let d1 = ((forward / k).ln() + 0.5 * sd * sd) / sd;
        forward * cdf(d1) - k * cdf(d1 - sd)
    };
    ConditionalPrice { inner, discounted: (-m.r * m.maturity).exp() * inner }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMethod {
    DensityQuadrature,
    MixingMc,
    PlainMc,
    MartingaleCheck,
}

impl PriceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            PriceMethod::DensityQuadrature => "density_quadrature",
            PriceMethod::MixingMc => "mixing_mc",
            PriceMethod::PlainMc => "plain_mc",
            PriceMethod::MartingaleCheck => "martingale_check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimate {
    pub method: PriceMethod,
    pub value: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
}

impl PriceEstimate {
    fn new(method: PriceMethod, value: f64, std_error: f64) -> Self {
        Self { method, value, std_error, ci95: (value - 1.96 * std_error, value + 1.96 * std_error) }
    }

    fn from_summary(method: PriceMethod, s: &Summary) -> Self {
        Self::new(method, s.mean, s.se())
    }

    pub fn overlaps(&self, other: &PriceEstimate) -> bool {
        self.ci95.0 <= other.ci95.1 && other.ci95.0 <= self.ci95.1
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PricingError {
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("density grid has {points} points; at least {MIN_DENSITY_POINTS} needed")]
    GridTooCoarse { points: usize },
    #[error("density mass {mass:.4} below 0.9; estimate too noisy to price")]
    NegativeMassWarning { mass: f64 },
}

pub const MIN_DENSITY_POINTS: usize = 21;
pub const MIN_DENSITY_MASS: f64 = 0.9;

impl From<StatsError> for PricingError {
    fn from(_: StatsError) -> Self {
        PricingError::EmptyEnsemble
    }
}

/// Mixing estimator: mean of the discounted conditional prices.
pub fn price_mixing(avg_variances: &[f64], contract: &Contract, m: &MarketInputs) -> Result<PriceEstimate, PricingError> {
    price_mixing_with(norm_cdf, avg_variances, contract, m)
}

pub fn price_mixing_with(
    cdf: CdfFn,
    avg_variances: &[f64],
    contract: &Contract,
    m: &MarketInputs,
) -> Result<PriceEstimate, PricingError> {
    let v: Vec<f64> =
        avg_variances.iter().map(|&x| bs_conditional_with(cdf, x.max(0.0).sqrt(), contract, m).discounted).collect();
    Ok(PriceEstimate::from_summary(PriceMethod::MixingMc, &summarize(&v)?))
}

/// Trapezoid quadrature of the discounted conditional price against `p̂`;
/// the SE treats the pointwise density errors as independent.
pub fn price_from_density(
    density: &DensityEstimate,
    contract: &Contract,
    m: &MarketInputs,
) -> Result<PriceEstimate, PricingError> {
    if density.x.len() < MIN_DENSITY_POINTS {
        return Err(PricingError::GridTooCoarse { points: density.x.len() });
    }
    if !(density.normalization >= MIN_DENSITY_MASS) {
        return Err(PricingError::NegativeMassWarning { mass: density.normalization });
    }
    let f: Vec<f64> = density.x.iter().map(|&x| bs_conditional(x.max(0.0).sqrt(), contract, m).discounted).collect();
    let e = integrate_against(density, &f);
    Ok(PriceEstimate::new(PriceMethod::DensityQuadrature, e.value, e.se))
}

/// Density quadrature straight from the weighted samples: the same value as
/// [`price_from_density`] on the same grid, with the exact per-path SE in
/// place of the independent-error approximation.
pub fn price_from_samples(
    samples: &[WeightedSample],
    x_grid: &[f64],
    estimator: Estimator,
    contract: &Contract,
    m: &MarketInputs,
) -> Result<PriceEstimate, PricingError> {
    if samples.is_empty() {
        return Err(PricingError::EmptyEnsemble);
    }
    if x_grid.len() < MIN_DENSITY_POINTS {
        return Err(PricingError::GridTooCoarse { points: x_grid.len() });
    }
    let density = estimate_density(samples, x_grid, estimator).map_err(|_| PricingError::EmptyEnsemble)?;
    if !(density.normalization >= MIN_DENSITY_MASS) {
        return Err(PricingError::NegativeMassWarning { mass: density.normalization });
    }
    let f: Vec<f64> = x_grid.iter().map(|&x| bs_conditional(x.max(0.0).sqrt(), contract, m).discounted).collect();
    let e = quadrature_from_samples(samples, x_grid, &f, estimator).map_err(|_| PricingError::EmptyEnsemble)?;
    Ok(PriceEstimate::new(PriceMethod::DensityQuadrature, e.value, e.se))
}

/// Plain Monte Carlo from terminal asset samples.
pub fn price_plain_mc(terminal_assets: &[f64], contract: &Contract, m: &MarketInputs) -> Result<PriceEstimate, PricingError> {
    let df = (-m.r * m.maturity).exp();
    let v: Vec<f64> = terminal_assets.iter().map(|&s| df * (s - contract.strike).max(0.0)).collect();
    Ok(PriceEstimate::from_summary(PriceMethod::PlainMc, &summarize(&v)?))
}

/// Mean of `e^{-rT} S_T`, which must equal `s0`.
pub fn martingale_check(terminal_assets: &[f64], m: &MarketInputs) -> Result<PriceEstimate, PricingError> {
    let df = (-m.r * m.maturity).exp();
    let v: Vec<f64> = terminal_assets.iter().map(|&s| df * s).collect();
    Ok(PriceEstimate::from_summary(PriceMethod::MartingaleCheck, &summarize(&v)?))
}
