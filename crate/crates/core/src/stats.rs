//! Reductions and summary statistics.
//!
//! Every mean in the crate goes through [`pairwise_sum`], a fixed binary
//! tree over the input order, so a result depends only on the values and
//! their order, never on how the values were produced.

use crate::density::{DensityEstimate, DensityMethod};
use crate::quad::trapezoid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` without allocating the mapped slice.
pub fn pairwise_sum_by<T>(values: &[T], f: &impl Fn(&T) -> f64) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(0.0, |a, b| a + f(b));
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(pairwise_sum(values) / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` for n = 1.
    pub std_dev: Option<f64>,
    pub std_error: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

impl Summary {
    /// Standard error with the n = 1 case mapped to 0.
    pub fn se(&self) -> f64 {
        self.std_error.unwrap_or(0.0)
    }
}

pub fn summarize(values: &[f64]) -> Result<Summary, StatsError> {
    let n = values.len();
    let mut mean = mean(values)?;
    // a constant sample has its value as mean and zero spread, exactly
    if values.iter().all(|v| *v == values[0]) {
        mean = values[0];
    }
    if n < 2 {
        return Ok(Summary { n, mean, std_dev: None, std_error: None, ci95: None });
    }
    let ss = pairwise_sum_by(values, &|x| (x - mean) * (x - mean));
    let sd = (ss / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    Ok(Summary {
        n,
        mean,
        std_dev: Some(sd),
        std_error: Some(se),
        ci95: Some((mean - 1.96 * se, mean + 1.96 * se)),
    })
}

/// Variance estimate with its standard error, `Var̂ ± √((m4 − s⁴(n−3)/(n−1))/n)`.
pub fn variance_with_se(values: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = values.len();
    if n < 4 {
        return Err(StatsError::TooFewSamples { needed: 4, got: n });
    }
    let m = mean(values)?;
    let nf = n as f64;
    let s2 = pairwise_sum_by(values, &|x| (x - m).powi(2)) / (nf - 1.0);
    let m4 = pairwise_sum_by(values, &|x| (x - m).powi(4)) / nf;
    let var_of_s2 = (m4 - s2 * s2 * (nf - 3.0) / (nf - 1.0)) / nf;
    Ok((s2, var_of_s2.max(0.0).sqrt()))
}

/// Linear-interpolated empirical quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Clamps values to their `[q, 1 − q]` empirical quantiles.
pub fn winsorize(values: &mut [f64], q: f64) {
    if values.is_empty() {
        return;
    }
    let sorted = sorted_copy(values);
    let lo = quantile_sorted(&sorted, q);
    let hi = quantile_sorted(&sorted, 1.0 - q);
    for v in values.iter_mut() {
        *v = v.clamp(lo, hi);
    }
}

pub const KDE_MIN_SAMPLES: usize = 100;
pub const KDE_BLOCKS: usize = 10;

/// Silverman's rule of thumb, `1.06 σ̂ N^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64, StatsError> {
    let s = summarize(samples)?;
    let sd = s.std_dev.unwrap_or(0.0);
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gaussian_kde_at(samples: &[f64], x: f64, h: f64) -> f64 {
    let s = pairwise_sum_by(samples, &|&v| {
        let u = (x - v) / h;
        (-0.5 * u * u).exp()
    });
    s * INV_SQRT_2PI / (h * samples.len() as f64)
}

/// Gaussian kernel density estimate with Silverman bandwidth; the per-point
/// standard error comes from re-estimating on 10 contiguous blocks with the
/// global bandwidth.
///
/// Degenerate samples (zero spread) give a zero bandwidth; the grid spacing
/// is used instead so that identical samples produce a unit-mass spike.
pub fn kde_density(samples: &[f64], x_grid: &[f64]) -> Result<DensityEstimate, StatsError> {
    if samples.len() < KDE_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples { needed: KDE_MIN_SAMPLES, got: samples.len() });
    }
    let mut h = silverman_bandwidth(samples)?;
    if !(h > 0.0) {
        h = grid_spacing(x_grid).unwrap_or(1.0);
    }
    let p_hat: Vec<f64> = x_grid.iter().map(|&x| gaussian_kde_at(samples, x, h)).collect();
    let block = samples.len() / KDE_BLOCKS;
    let se: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            let per_block: Vec<f64> = (0..KDE_BLOCKS)
                .map(|b| {
                    let end = if b + 1 == KDE_BLOCKS { samples.len() } else { (b + 1) * block };
                    gaussian_kde_at(&samples[b * block..end], x, h)
                })
                .collect();
            summarize(&per_block).map(|s| s.se()).unwrap_or(0.0)
        })
        .collect();
    let normalization = trapezoid(x_grid, &p_hat);
    Ok(DensityEstimate { x: x_grid.to_vec(), p_hat, se, normalization, method: DensityMethod::Kde })
}

fn grid_spacing(x: &[f64]) -> Option<f64> {
    x.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{NoiseStream, Purpose};

    #[test]
    fn summarize_constant() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std_error, Some(0.0));
        assert_eq!(s.ci95, Some((1.0, 1.0)));
    }

    #[test]
    fn summarize_two_points() {
        let s = summarize(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!((s.se() - 1.0).abs() < 1e-15);
        let (lo, hi) = s.ci95.unwrap();
        assert!((lo + 0.96).abs() < 1e-12 && (hi - 2.96).abs() < 1e-12);
    }

    #[test]
    fn summarize_single_and_empty() {
        let s = summarize(&[3.0]).unwrap();
        assert_eq!(s.std_error, None);
        assert_eq!(summarize(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn alternating_signs_cancel_exactly() {
        let v: Vec<f64> = (0..1_000_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert_eq!(mean(&v).unwrap(), 0.0);
    }

    #[test]
    fn pairwise_beats_naive_on_large_offsets() {
        let v: Vec<f64> = (0..1_000_000).map(|_| 0.1).collect();
        let exact = 100_000.0;
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - exact).abs() <= (naive - exact).abs());
        assert!((pairwise_sum(&v) - exact).abs() < 1e-8);
    }

    #[test]
    fn kde_identical_samples_spike() {
        let s = vec![0.5; 200];
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
        let d = kde_density(&s, &grid).unwrap();
        assert!((d.normalization - 1.0).abs() < 1e-3);
        let imax = d.p_hat.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(imax, 100);
    }

    #[test]
    fn kde_too_few_samples() {
        assert!(matches!(kde_density(&[1.0; 10], &[0.0, 1.0]), Err(StatsError::TooFewSamples { .. })));
    }

    #[test]
    fn kde_recovers_standard_normal() {
        let s = NoiseStream::new(5, 0, Purpose::AssetDriver).normals(50_000);
        let grid: Vec<f64> = (0..=80).map(|i| -2.0 + i as f64 * 0.05).collect();
        let d = kde_density(&s, &grid).unwrap();
        for (x, p) in grid.iter().zip(&d.p_hat) {
            let truth = INV_SQRT_2PI * (-0.5 * x * x).exp();
            assert!((p - truth).abs() < 0.01, "x={x} kde={p} truth={truth}");
        }
        let wide: Vec<f64> = (0..=160).map(|i| -8.0 + i as f64 * 0.1).collect();
        let m = kde_density(&s, &wide).unwrap().normalization;
        assert!((0.98..=1.02).contains(&m), "mass {m}");
    }

    #[test]
    fn variance_se_is_sane() {
        let s = NoiseStream::new(9, 0, Purpose::AssetDriver).normals(100_000);
        let (v, se) = variance_with_se(&s).unwrap();
        assert!((v - 1.0).abs() < 3.0 * se);
        assert!((se - (2.0f64 / 100_000.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn quantiles_and_winsorize() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        assert_eq!(quantile_sorted(&v, 0.5), 50.0);
        assert_eq!(quantile_sorted(&v, 0.255), 25.5);
        let mut w = v.clone();
        winsorize(&mut w, 0.1);
        assert_eq!(w[0], 10.0);
        assert_eq!(w[100], 90.0);
        assert_eq!(w[50], 50.0);
    }
}
