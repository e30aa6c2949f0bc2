//! The acceptance battery: statistical and exactness checks on the two
//! reference configurations.
//!
//! Ensembles are built lazily and shared between checks, so a single check
//! can be run on its own. `Scale::Reduced` is what `selfcheck` runs; the
//! per-check sizes are listed on [`Sizes`].

use std::fmt;
use std::sync::OnceLock;

use crate::density::{empirical_band_probability, estimate_density, integrated_survival, linspace, DENSITY_ESTIMATOR, PRICE_ESTIMATOR};
use crate::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult, ModelSpec};
use crate::grid::TimeGrid;
use crate::malliavin_cir::{compute_weight_cir, CirKernelState};
use crate::malliavin_ou::OuKernelState;
use crate::model::{reference_vol_family, validate_cir, validate_ou, CirParams, Contract, OuParams};
use crate::oracle::{cir_denominator_brute, cir_weight_terms_brute, norm_cdf_series, ou_c_of_h_brute, ou_denominator_brute};
use crate::path::{simulate_cir_path, simulate_ou_path};
use crate::pipeline::{density_run, price_rows, resolve_grid, GridSpec};
use crate::pricing::{bs_conditional_with, norm_cdf, price_mixing_with, CdfFn, MarketInputs, PriceEstimate};
use crate::report::{density_csv, prices_csv, weights_csv};
use crate::rng::{NoiseStream, Purpose};
use crate::stats::{kde_density, summarize, variance_with_se};

pub const DEFAULT_SEED: u64 = 42;

pub fn reference_ou_params() -> OuParams {
    OuParams { alpha: 1.0, k: 0.5, y0: 0.0, s0: 100.0, r: 0.05, mu: 0.05, maturity: 1.0 }
}

pub fn reference_cir_params() -> CirParams {
    CirParams { b: 1.0, k: 0.25, z0: 1.0, s0: 100.0, r: 0.05, mu: 0.05, maturity: 1.0 }
}

pub fn reference_ou() -> ModelSpec {
    let vol = reference_vol_family(0.1, 0.1).expect("reference constants are valid");
    ModelSpec::Ou(validate_ou(reference_ou_params(), vol, true).expect("reference OU config is valid"))
}

pub fn reference_cir() -> ModelSpec {
    ModelSpec::Cir(validate_cir(reference_cir_params(), true).expect("reference CIR config is valid"))
}

pub fn reference_contract() -> Contract {
    Contract::new(100.0).expect("positive strike")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Reduced,
}

/// Ensemble sizes per scale.
///
/// | ensemble  | Desk          | Reduced       | checks      |
/// |-----------|---------------|---------------|-------------|
/// | moments   | 100000, n=256 (OU), n=512 (CIR) | 20000, same n | 1, 2, 10 |
/// | density   | 50000, n=512  | 50000, n=256  | 3-7, 11     |
/// | pricing   | 50000, n=256  | 50000, n=128  | 8           |
/// | kernels   | 5 paths, n=64 | same          | 12          |
/// | threads   | 2000, n=64    | same          | 13          |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizes {
    pub moment_paths: usize,
    pub ou_moment_steps: usize,
    pub cir_moment_steps: usize,
    pub density_paths: usize,
    pub density_steps: usize,
    pub pricing_paths: usize,
    pub pricing_steps: usize,
    pub kernel_paths: usize,
    pub kernel_steps: usize,
    pub repro_paths: usize,
    pub repro_steps: usize,
}

impl Sizes {
    pub fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self {
                moment_paths: 100_000,
                ou_moment_steps: 256,
                cir_moment_steps: 512,
                density_paths: 50_000,
                density_steps: 512,
                pricing_paths: 50_000,
                pricing_steps: 256,
                kernel_paths: 5,
                kernel_steps: 64,
                repro_paths: 2_000,
                repro_steps: 64,
            },
            Scale::Reduced => Self {
                moment_paths: 20_000,
                ou_moment_steps: 256,
                cir_moment_steps: 512,
                density_paths: 50_000,
                density_steps: 256,
                pricing_paths: 50_000,
                pricing_steps: 128,
                kernel_paths: 5,
                kernel_steps: 64,
                repro_paths: 2_000,
                repro_steps: 64,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BatteryConfig {
    pub scale: Scale,
    pub seed: u64,
    /// Worker threads for the ensembles; `None` uses every core.
    pub threads: Option<usize>,
    /// The `Φ` used by the conditional-price checks; replaced only for
    /// fault injection.
    pub cdf: CdfFn,
}

impl BatteryConfig {
    pub fn new(scale: Scale) -> Self {
        Self { scale, seed: DEFAULT_SEED, threads: None, cdf: norm_cdf }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {:>2} {:<22} {}", self.id, self.name, self.detail)
    }
}

/// Ids of the acceptance criteria; [`MONOTONICITY_CHECK`] is an extra
/// invariant run by the self-check.
pub const ACCEPTANCE_CHECKS: [u8; 13] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];
pub const MONOTONICITY_CHECK: u8 = 14;

pub fn check_name(id: u8) -> &'static str {
    match id {
        1 => "ou-moments",
        2 => "cir-moments",
        3 => "zero-mean-weights",
        4 => "duality",
        5 => "density-mass",
        6 => "density-vs-kde",
        7 => "density-vs-survival",
        8 => "price-triangle",
        9 => "deterministic-vol",
        10 => "martingale",
        11 => "positive-denominators",
        12 => "brute-force-kernels",
        13 => "thread-invariance",
        14 => "bs-monotonicity",
        _ => "unknown",
    }
}

type Lazy = OnceLock<Result<EnsembleResult, String>>;

pub struct Battery {
    cfg: BatteryConfig,
    sizes: Sizes,
    ou: ModelSpec,
    cir: ModelSpec,
    contract: Contract,
    ou_moments: Lazy,
    cir_moments: Lazy,
    ou_density: Lazy,
    cir_density: Lazy,
    ou_pricing: Lazy,
    cir_pricing: Lazy,
}

/// `|a − b| < 3 se`, rendered for the detail column.
fn within(label: &str, a: f64, b: f64, se: f64) -> (bool, String) {
    let ok = (a - b).abs() < 3.0 * se;
    (ok, format!("{label}: {a:.6} vs {b:.6} (|z|={:.2})", (a - b).abs() / se))
}

fn combine(parts: Vec<(bool, String)>) -> (bool, String) {
    let passed = parts.iter().all(|p| p.0);
    (passed, parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

impl Battery {
    pub fn new(cfg: BatteryConfig) -> Self {
        Self {
            cfg,
            sizes: Sizes::for_scale(cfg.scale),
            ou: reference_ou(),
            cir: reference_cir(),
            contract: reference_contract(),
            ou_moments: OnceLock::new(),
            cir_moments: OnceLock::new(),
            ou_density: OnceLock::new(),
            cir_density: OnceLock::new(),
            ou_pricing: OnceLock::new(),
            cir_pricing: OnceLock::new(),
        }
    }

    pub fn config(&self) -> &BatteryConfig {
        &self.cfg
    }

    fn ensemble<'a>(&self, slot: &'a Lazy, model: &ModelSpec, cfg: EnsembleConfig) -> Result<&'a EnsembleResult, String> {
        slot.get_or_init(|| run_ensemble(model, &cfg, self.cfg.threads).map_err(|e| e.to_string())).as_ref().map_err(Clone::clone)
    }

    fn moments_cfg(&self, steps: usize) -> EnsembleConfig {
        EnsembleConfig { compute_weights: false, ..EnsembleConfig::new(self.sizes.moment_paths, steps, self.cfg.seed) }
    }

    fn ou_moments(&self) -> Result<&EnsembleResult, String> {
        self.ensemble(&self.ou_moments, &self.ou, self.moments_cfg(self.sizes.ou_moment_steps))
    }

    fn cir_moments(&self) -> Result<&EnsembleResult, String> {
        self.ensemble(&self.cir_moments, &self.cir, self.moments_cfg(self.sizes.cir_moment_steps))
    }

    fn density_cfg(&self) -> EnsembleConfig {
        EnsembleConfig {
            sample_asset: false,
            ..EnsembleConfig::new(self.sizes.density_paths, self.sizes.density_steps, self.cfg.seed)
        }
    }

    fn density(&self, model: &ModelSpec) -> Result<&EnsembleResult, String> {
        match model {
            ModelSpec::Ou(_) => self.ensemble(&self.ou_density, model, self.density_cfg()),
            ModelSpec::Cir(_) => self.ensemble(&self.cir_density, model, self.density_cfg()),
        }
    }

    fn pricing(&self, model: &ModelSpec) -> Result<&EnsembleResult, String> {
        let cfg = EnsembleConfig::new(self.sizes.pricing_paths, self.sizes.pricing_steps, self.cfg.seed);
        match model {
            ModelSpec::Ou(_) => self.ensemble(&self.ou_pricing, model, cfg),
            ModelSpec::Cir(_) => self.ensemble(&self.cir_pricing, model, cfg),
        }
    }

    fn models(&self) -> [(&'static str, &ModelSpec); 2] {
        [("ou", &self.ou), ("cir", &self.cir)]
    }

    pub fn run(&self, id: u8) -> CheckOutcome {
        let result = match id {
            1 => self.ou_moment_check(),
            2 => self.cir_moment_check(),
            3 => self.zero_mean_check(),
            4 => self.duality_check(),
            5 => self.mass_check(),
            6 => self.kde_check(),
            7 => self.survival_check(),
            8 => self.triangle_check(),
            9 => self.deterministic_check(),
            10 => self.martingale_check(),
            11 => self.positivity_check(),
            12 => self.kernel_check(),
            13 => self.thread_check(),
            14 => Ok(self.monotonicity_check()),
            _ => Err(format!("no check with id {id}")),
        };
        let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        CheckOutcome { id, name: check_name(id), passed, detail }
    }

    pub fn run_all(&self) -> Vec<CheckOutcome> {
        ACCEPTANCE_CHECKS.iter().chain(&[MONOTONICITY_CHECK]).map(|&id| self.run(id)).collect()
    }

    fn ou_moment_check(&self) -> Result<(bool, String), String> {
        let e = self.ou_moments()?;
        let p = reference_ou_params();
        let mean_exact = p.y0 * (-p.alpha * p.maturity).exp();
        let var_exact = p.k * p.k / (2.0 * p.alpha) * (1.0 - (-2.0 * p.alpha * p.maturity).exp());
        moment_pair(&e.terminal_states(), mean_exact, var_exact)
    }

    fn cir_moment_check(&self) -> Result<(bool, String), String> {
        let e = self.cir_moments()?;
        let p = reference_cir_params();
        let decay = (-p.maturity).exp();
        let mean_exact = p.z0 * decay + p.b * (1.0 - decay);
        let var_exact = p.k * p.k * p.z0 * (decay - decay * decay) + p.b * p.k * p.k / 2.0 * (1.0 - decay).powi(2);
        moment_pair(&e.terminal_states(), mean_exact, var_exact)
    }

    fn zero_mean_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let s = summarize(&self.density(m)?.weights()).map_err(|e| e.to_string())?;
            parts.push(within(&format!("{tag} mean weight"), s.mean, 0.0, s.se()));
        }
        Ok(combine(parts))
    }

    fn duality_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let e = self.density(m)?;
            let fd: Vec<f64> = e.records.iter().map(|r| r.avg_variance * r.weight).collect();
            let s = summarize(&fd).map_err(|e| e.to_string())?;
            parts.push(within(&format!("{tag} E[F d]"), s.mean, 1.0, s.se()));
            let f2d: Vec<f64> = e.records.iter().map(|r| r.avg_variance * r.avg_variance * r.weight).collect();
            let s2 = summarize(&f2d).map_err(|e| e.to_string())?;
            let sf = summarize(&e.avg_variances()).map_err(|e| e.to_string())?;
            let se = (s2.se().powi(2) + (2.0 * sf.se()).powi(2)).sqrt();
            parts.push(within(&format!("{tag} E[F^2 d]"), s2.mean, 2.0 * sf.mean, se));
        }
        Ok(combine(parts))
    }

    fn auto_grid_for(&self, m: &ModelSpec, e: &EnsembleResult) -> Result<Vec<f64>, String> {
        resolve_grid(GridSpec::Auto, m, e).map_err(|e| e.to_string())
    }

    fn mass_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let e = self.density(m)?;
            let grid = self.auto_grid_for(m, e)?;
            let d = estimate_density(&e.weighted_samples(), &grid, DENSITY_ESTIMATOR).map_err(|e| e.to_string())?;
            let ok = (0.95..=1.05).contains(&d.normalization);
            parts.push((ok, format!("{tag} mass {:.4}", d.normalization)));
        }
        Ok(combine(parts))
    }

    fn kde_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let e = self.density(m)?;
            let auto = self.auto_grid_for(m, e)?;
            // the 21 interior nodes of a 23-node grid over the auto range
            let full = linspace(auto[0], auto[auto.len() - 1], 23);
            let grid = &full[1..22];
            let mal = estimate_density(&e.weighted_samples(), grid, DENSITY_ESTIMATOR).map_err(|e| e.to_string())?;
            let kde = kde_density(&e.avg_variances(), grid).map_err(|e| e.to_string())?;
            let mut worst = 0.0_f64;
            let mut ok = true;
            for i in 0..grid.len() {
                let bound = 3.0 * (mal.se[i] + kde.se[i]);
                let gap = (mal.p_hat[i] - kde.p_hat[i]).abs();
                ok &= gap < bound;
                worst = worst.max(gap / bound);
            }
            parts.push((ok, format!("{tag} max gap/bound {worst:.3}")));
        }
        Ok(combine(parts))
    }

    fn survival_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let e = self.density(m)?;
            let grid = self.auto_grid_for(m, e)?;
            let tails = integrated_survival(&e.weighted_samples(), &grid, DENSITY_ESTIMATOR).map_err(|e| e.to_string())?;
            let values = e.avg_variances();
            let hi = grid[grid.len() - 1];
            let mut worst = 0.0_f64;
            let mut ok = true;
            for idx in (0..10).map(|j| 2 + 4 * j) {
                let emp = empirical_band_probability(&values, grid[idx], hi).map_err(|e| e.to_string())?;
                let se = (tails[idx].se.powi(2) + emp.se.powi(2)).sqrt();
                let z = (tails[idx].value - emp.value).abs() / se;
                ok &= z < 3.0;
                worst = worst.max(z);
            }
            parts.push((ok, format!("{tag} max |z| {worst:.2}")));
        }
        Ok(combine(parts))
    }

    fn triangle_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let e = self.pricing(m)?;
            let grid = self.auto_grid_for(m, e)?;
            let rows = price_rows(m, e, &self.contract, Some(&grid), PRICE_ESTIMATOR).map_err(|e| e.to_string())?;
            let (dq, mix, plain) = (&rows[0], &rows[1], &rows[2]);
            let overlap = dq.overlaps(mix) && dq.overlaps(plain) && mix.overlaps(plain);
            let rel = (dq.value - mix.value).abs() / mix.value;
            parts.push((
                overlap && rel < 0.02,
                format!(
                    "{tag} dq {} mix {} plain {} (dq-mix {:.2}%)",
                    fmt_price(dq),
                    fmt_price(mix),
                    fmt_price(plain),
                    100.0 * rel
                ),
            ));
        }
        Ok(combine(parts))
    }

    fn deterministic_check(&self) -> Result<(bool, String), String> {
        let m = self.ou.market();
        let samples = vec![0.04; self.sizes.density_paths];
        let mix = price_mixing_with(self.cfg.cdf, &samples, &self.contract, &m).map_err(|e| e.to_string())?;
        let oracle = bs_conditional_with(norm_cdf_series, 0.2, &self.contract, &m).discounted;
        let err = (mix.value - oracle).abs();
        Ok((err < 1e-9 && mix.std_error == 0.0, format!("mixing {:.9} oracle {oracle:.9} |diff| {err:.1e}", mix.value)))
    }

    fn martingale_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, e) in [("ou", self.ou_moments()?), ("cir", self.cir_moments()?)] {
            let s0 = reference_ou_params().s0;
            let m = MarketInputs { s0, r: 0.05, maturity: 1.0 };
            let mc = crate::pricing::martingale_check(&e.terminal_assets(), &m).map_err(|e| e.to_string())?;
            parts.push(within(&format!("{tag} E[e^-rT S]"), mc.value, s0, mc.std_error));
        }
        Ok(combine(parts))
    }

    fn positivity_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let e = self.density(m)?;
            let bad = e.denominator_failures() + e.records.iter().filter(|r| !(r.denominator > 0.0)).count();
            parts.push((bad == 0, format!("{tag} {bad} non-positive of {}", e.n_paths)));
        }
        Ok(combine(parts))
    }

    fn kernel_check(&self) -> Result<(bool, String), String> {
        let (ModelSpec::Ou(ou), ModelSpec::Cir(cir)) = (&self.ou, &self.cir) else { unreachable!() };
        let grid = TimeGrid::new(1.0, self.sizes.kernel_steps).map_err(|e| e.to_string())?;
        let alpha = ou.params().alpha;
        let (mut g_err, mut c_err, mut i_err, mut t_err) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        for idx in 0..self.sizes.kernel_paths as u64 {
            let mut s = NoiseStream::new(self.cfg.seed, idx, Purpose::VolatilityDriver);
            let path = simulate_ou_path(ou, &grid, &mut s);
            let k = OuKernelState::from_path(&path, ou).map_err(|e| e.to_string())?;
            g_err = g_err.max(rel_err(k.g_denominator, ou_denominator_brute(&grid, &k.nu, alpha)));
            let brute: Vec<f64> = (0..grid.n_nodes()).map(|i| ou_c_of_h_brute(&grid, &k.nu, &k.nu_prime, alpha, i)).collect();
            // C vanishes at maturity, so errors are measured against the largest |C|
            let scale = brute.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            for (a, b) in k.c_of_h.iter().zip(&brute) {
                c_err = c_err.max((a - b).abs() / scale);
            }

            let mut s = NoiseStream::new(self.cfg.seed, idx, Purpose::VolatilityDriver);
            let path = simulate_cir_path(cir, &grid, &mut s).map_err(|e| e.to_string())?;
            let k = CirKernelState::from_path(&path, cir).map_err(|e| e.to_string())?;
            i_err = i_err.max(rel_err(k.i_denominator, cir_denominator_brute(&k, &grid)));
            let w = compute_weight_cir(&path, &k).map_err(|e| e.to_string())?;
            let b = cir_weight_terms_brute(&k, &path);
            for (x, y) in [(w.term_ito, b.term_ito), (w.term_trace, b.term_trace), (w.anticipation, b.anticipation)] {
                t_err = t_err.max(rel_err(x, y));
            }
        }
        let ok = [g_err, c_err, i_err, t_err].iter().all(|&e| e < 1e-8);
        Ok((ok, format!("max rel err G {g_err:.1e} C {c_err:.1e} I {i_err:.1e} terms {t_err:.1e}")))
    }

    fn thread_check(&self) -> Result<(bool, String), String> {
        let mut parts = Vec::new();
        for (tag, m) in self.models() {
            let cfg = EnsembleConfig::new(self.sizes.repro_paths, self.sizes.repro_steps, self.cfg.seed);
            let reference = render_reports(m, &self.contract, &cfg, 1)?;
            let mut same = true;
            for threads in [4, 8] {
                same &= render_reports(m, &self.contract, &cfg, threads)? == reference;
            }
            parts.push((same, format!("{tag} {} bytes identical across 1/4/8 threads: {same}", reference.len())));
        }
        Ok(combine(parts))
    }

    /// Call prices must rise with `σ̄` and stay within their no-arbitrage
    /// bounds; a broken `Φ` shows up here first.
    fn monotonicity_check(&self) -> (bool, String) {
        let m = self.ou.market();
        let bounds = |c: &Contract, v: f64| {
            let lower = (m.s0 - c.strike * (-m.r * m.maturity).exp()).max(0.0);
            v >= lower - 1e-12 && v <= m.s0 + 1e-12
        };
        let mut ok = true;
        let mut first_bad = None;
        for strike in [50.0, 80.0, 100.0, 120.0, 200.0] {
            let c = Contract::new(strike).expect("positive strike");
            let mut prev = f64::NEG_INFINITY;
            for j in 0..=200 {
                let sigma = 0.005 * j as f64;
                let v = bs_conditional_with(self.cfg.cdf, sigma, &c, &m).discounted;
                if !(v >= prev - 1e-12) || !bounds(&c, v) {
                    ok = false;
                    first_bad.get_or_insert((strike, sigma, v));
                }
                prev = v;
            }
        }
        match first_bad {
            None => (ok, "5 strikes x 201 vols monotone and within bounds".to_string()),
            Some((k, s, v)) => (false, format!("violation at K={k} sigma={s:.3}: price {v:.6}")),
        }
    }
}

fn fmt_price(p: &PriceEstimate) -> String {
    format!("{:.4}+-{:.4}", p.value, p.std_error)
}

fn moment_pair(values: &[f64], mean_exact: f64, var_exact: f64) -> Result<(bool, String), String> {
    let s = summarize(values).map_err(|e| e.to_string())?;
    let (v, v_se) = variance_with_se(values).map_err(|e| e.to_string())?;
    Ok(combine(vec![within("mean", s.mean, mean_exact, s.se()), within("var", v, var_exact, v_se)]))
}

/// The three CSV reports for one ensemble, concatenated.
pub fn render_reports(model: &ModelSpec, contract: &Contract, cfg: &EnsembleConfig, threads: usize) -> Result<String, String> {
    let e = run_ensemble(model, cfg, Some(threads)).map_err(|e| e.to_string())?;
    let grid = resolve_grid(GridSpec::Auto, model, &e).map_err(|e| e.to_string())?;
    let d = density_run(&e, &grid, DENSITY_ESTIMATOR).map_err(|e| e.to_string())?;
    let prices = price_rows(model, &e, contract, Some(&grid), PRICE_ESTIMATOR).map_err(|e| e.to_string())?;
    Ok(weights_csv(&e.records) + &density_csv(&d.malliavin, d.kde.as_ref()) + &prices_csv(&prices))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn broken_cdf(x: f64) -> f64 {
        // sign error in the argument
        norm_cdf(-x)
    }

    #[test]
    fn reference_models_are_density_ready() {
        assert!(reference_ou().density_ready());
        assert!(reference_cir().density_ready());
    }

    #[test]
    fn monotonicity_passes_with_correct_cdf() {
        let b = Battery::new(BatteryConfig::new(Scale::Reduced));
        assert!(b.run(MONOTONICITY_CHECK).passed);
    }

    #[test]
    fn broken_cdf_fails_monotonicity_and_deterministic_checks() {
        let cfg = BatteryConfig { cdf: broken_cdf, ..BatteryConfig::new(Scale::Reduced) };
        let b = Battery::new(cfg);
        assert!(!b.run(MONOTONICITY_CHECK).passed);
        assert!(!b.run(9).passed);
    }

    #[test]
    fn deterministic_check_passes() {
        let b = Battery::new(BatteryConfig::new(Scale::Reduced));
        let o = b.run(9);
        assert!(o.passed, "{o}");
    }

    #[test]
    fn kernel_check_passes() {
        let b = Battery::new(BatteryConfig::new(Scale::Reduced));
        let o = b.run(12);
        assert!(o.passed, "{o}");
    }

    #[test]
    fn unknown_id_fails() {
        let b = Battery::new(BatteryConfig::new(Scale::Reduced));
        assert!(!b.run(99).passed);
    }

    #[test]
    fn outcome_line_format() {
        let o = CheckOutcome { id: 3, name: "zero-mean-weights", passed: true, detail: "x".into() };
        assert!(o.to_string().starts_with("PASS  3 zero-mean-weights"));
    }
}
