//! Malliavin weight for the averaged variance `σ̄² = (1/T)∫σ²(Y)ds` of the
//! OU-driven model.
//!
//! With `K(t₁,t₂) = e^{-α|t₁-t₂|} − e^{-α(t₁+t₂)}`,
//!
//! ```text
//! G     = ∫∫ K(t₁,t₂) ν(Y_{t₁}) ν(Y_{t₂}) dt₁ dt₂
//! η_t   = (αT/k) e^{-αt} ν(Y_t) / G
//! D_hη_t = αT e^{-αt} [ e^{-α(t-h)} 1{h<t} ν′(Y_t)/G − 2 ν(Y_t) e^{αh} C(h)/G² ]
//! C(h)  = ∫∫_{t₂>h} K(t₁,t₂) ν(Y_{t₁}) e^{-αt₂} ν′(Y_{t₂}) dt₂ dt₁
//! δ̄     = ∫ η_t (∫_0^t e^{αh} dW̃_h) dt − ∫∫_{h<t} e^{αh} D_hη_t dh dt
//! ```
//!
//! and `p(x) = E[1{σ̄² > x} δ̄]`.
//!
//! On the grid the weight is the exact Skorokhod integral of the discretized
//! functional (trapezoid `σ̄²`, exact OU transition): the discrete sensitivity
//! `∂Y_j/∂ΔW̃_i` is `k κ e^{-α(t_j-t_i)}` and the discrete `‖Dσ̄²‖²` carries
//! `λ G`, where `κ, λ → 1` as `dt → 0`. The dh-integrals are left-point sums
//! over increments. With these choices `E[g(σ̄²) δ̄] = E[g′(σ̄²)]` holds
//! exactly on any grid.

use crate::grid::TimeGrid;
use crate::model::{ValidatedOuModel, VolFunctionSpec, Violation};
use crate::path::PathBundle;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("non-positive denominator {value:e}")]
    NonPositiveDenominator { value: f64 },
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error("exponential overflow in {what}")]
    Overflow { what: &'static str },
    #[error("volatility assumption violated on path: {0}")]
    VolAssumption(Violation),
    #[error("model is not in density mode (k must be > 0)")]
    NotDensityReady,
}

/// `λ = 2α dt / (e^{2α dt} − 1)`: discrete over continuous `∫e^{2αh}dh`.
pub fn norm_factor(alpha: f64, dt: f64) -> f64 {
    let x = 2.0 * alpha * dt;
    x / x.exp_m1()
}

/// `κ = e^{α dt} √((1 − e^{-2α dt})/(2α dt))`: exact-transition loading per
/// unit increment relative to the continuum `D_hY_t = k e^{-α(t-h)}`.
pub fn loading_factor(alpha: f64, dt: f64) -> f64 {
    let x = 2.0 * alpha * dt;
    (alpha * dt).exp() * (-(-x).exp_m1() / x).sqrt()
}

/// `M_j = Σ_l w_l K(t_l, t_j) ν_l` on a uniform grid with spacing `dt`, O(n).
pub fn kernel_row_sums(dt: f64, weights: &[f64], nu: &[f64], alpha: f64) -> Vec<f64> {
    let n = nu.len();
    let decay = (-alpha * dt).exp();
    let wn: Vec<f64> = weights.iter().zip(nu).map(|(w, v)| w * v).collect();
    let mut fwd = vec![0.0; n];
    let mut bwd = vec![0.0; n];
    let mut acc = 0.0;
    for j in 0..n {
        acc = acc * decay + wn[j];
        fwd[j] = acc;
    }
    acc = 0.0;
    for j in (0..n).rev() {
        acc = acc * decay + wn[j];
        bwd[j] = acc;
    }
    let sep_terms: Vec<f64> = (0..n).map(|l| wn[l] * (-alpha * dt * l as f64).exp()).collect();
    let sep = pairwise_sum(&sep_terms);
    (0..n)
        .map(|j| fwd[j] + bwd[j] - wn[j] - (-alpha * dt * j as f64).exp() * sep)
        .collect()
}

/// `G = Σ_{j,l} w_j w_l K(t_j,t_l) ν_j ν_l` (trapezoid in both variables).
pub fn compute_denominator_g(dt: f64, weights: &[f64], nu: &[f64], alpha: f64) -> Result<f64, KernelError> {
    let m = kernel_row_sums(dt, weights, nu, alpha);
    let terms: Vec<f64> = (0..nu.len()).map(|j| weights[j] * nu[j] * m[j]).collect();
    let g = pairwise_sum(&terms);
    if !g.is_finite() {
        return Err(KernelError::NonFinite { what: "G" });
    }
    if g <= 0.0 {
        return Err(KernelError::NonPositiveDenominator { value: g });
    }
    Ok(g)
}

/// `η_{t_j} = (αT/k) e^{-α t_j} ν_j / G`.
pub fn compute_eta(dt: f64, nu: &[f64], alpha: f64, k: f64, maturity: f64, g: f64) -> Result<Vec<f64>, KernelError> {
    if !(g > 0.0) {
        return Err(KernelError::NonPositiveDenominator { value: g });
    }
    let scale = alpha * maturity / (k * g);
    Ok(nu.iter().enumerate().map(|(j, v)| scale * (-alpha * dt * j as f64).exp() * v).collect())
}

/// Per-path kernel quantities.
#[derive(Debug, Clone)]
pub struct OuKernelState {
    pub nu: Vec<f64>,
    pub nu_prime: Vec<f64>,
    /// Denominator `G` with the continuum kernel `K`.
    pub g_denominator: f64,
    /// `η_{t_j}` built from the discrete constants `k κ` and `λ G`.
    pub eta: Vec<f64>,
    /// `C(t_i)`, with `C(T) = 0`.
    pub c_of_h: Vec<f64>,
    /// `e^{α t_i} C(t_i)`, the form the recursions use.
    c_scaled: Vec<f64>,
    row_sums: Vec<f64>,
    pub norm_factor: f64,
    pub loading_factor: f64,
    alpha: f64,
    maturity: f64,
    dt: f64,
}

impl OuKernelState {
    pub fn from_path(path: &PathBundle, model: &ValidatedOuModel) -> Result<Self, KernelError> {
        if !model.density_ready() {
            return Err(KernelError::NotDensityReady);
        }
        let vol: &VolFunctionSpec = model.vol();
        let mut nu = Vec::with_capacity(path.states.len());
        let mut nu_prime = Vec::with_capacity(path.states.len());
        for &y in &path.states {
            let (a, b) = (vol.nu(y), vol.nu_prime(y));
            if !(vol.sigma_prime(y) > 0.0) {
                return Err(KernelError::VolAssumption(Violation::NonPositiveSigmaPrime { x: y }));
            }
            if !a.is_finite() || !b.is_finite() {
                return Err(KernelError::VolAssumption(Violation::NonFiniteNu { x: y }));
            }
            nu.push(a);
            nu_prime.push(b);
        }
        let p = model.params();
        Self::from_values(&path.grid, nu, nu_prime, p.alpha, p.k)
    }

    /// Kernel from explicit `ν`, `ν′` node values (frozen-path harnesses).
    pub fn from_values(grid: &TimeGrid, nu: Vec<f64>, nu_prime: Vec<f64>, alpha: f64, k: f64) -> Result<Self, KernelError> {
        let n = grid.n_nodes();
        assert_eq!(nu.len(), n);
        assert_eq!(nu_prime.len(), n);
        let dt = grid.dt();
        let maturity = grid.maturity();
        let weights = grid.weights();
        let lambda = norm_factor(alpha, dt);
        let kappa = loading_factor(alpha, dt);
        let row_sums = kernel_row_sums(dt, &weights, &nu, alpha);
        let g = compute_denominator_g(dt, &weights, &nu, alpha)?;
        let eta = compute_eta(dt, &nu, alpha, k * kappa, maturity, lambda * g)?;
        let decay = (-alpha * dt).exp();
        let mut c_scaled = vec![0.0; n];
        for i in (0..n - 1).rev() {
            c_scaled[i] = decay * (c_scaled[i + 1] + weights[i + 1] * nu_prime[i + 1] * row_sums[i + 1]);
        }
        let c_of_h = c_scaled.iter().enumerate().map(|(i, c)| (-alpha * dt * i as f64).exp() * c).collect();
        Ok(Self {
            nu,
            nu_prime,
            g_denominator: g,
            eta,
            c_of_h,
            c_scaled,
            row_sums,
            norm_factor: lambda,
            loading_factor: kappa,
            alpha,
            maturity,
            dt,
        })
    }

    /// `M_j = Σ_l w_l K(t_l, t_j) ν_l`.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    fn g_eff(&self) -> f64 {
        self.norm_factor * self.g_denominator
    }

    /// `D_{t_i} η_{t_j}`: derivative with respect to the increment on
    /// `[t_i, t_{i+1})`, reduced formula.
    pub fn d_eta(&self, i: usize, j: usize) -> f64 {
        let a = self.alpha;
        let ge = self.g_eff();
        let direct = if i < j {
            (-a * self.dt * (j - i) as f64).exp() * self.nu_prime[j] / ge
        } else {
            0.0
        };
        let correction = 2.0 * self.nu[j] * self.norm_factor * self.c_scaled[i] / (ge * ge);
        a * self.maturity * (-a * self.dt * j as f64).exp() * (direct - correction)
    }

    /// `Σ_{i<j} e^{α t_i} D_{t_i}η_{t_j} dt` for every node `j`.
    pub fn trace_columns(&self) -> Vec<f64> {
        let n = self.nu.len();
        let a = self.alpha;
        let ge = self.g_eff();
        let decay = (-a * self.dt).exp();
        let decay2 = decay * decay;
        let mut q = 0.0;
        let mut v = 0.0;
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            if j > 0 {
                q = decay2 * (q + 1.0);
                v = decay * (v + self.c_scaled[j - 1]);
            }
            let col = self.nu_prime[j] * q / ge - 2.0 * self.norm_factor * self.nu[j] * v / (ge * ge);
            out.push(a * self.maturity * self.dt * col);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuWeight {
    pub delta_bar: f64,
    pub term_ito: f64,
    pub term_trace: f64,
    pub g_denominator: f64,
}

pub fn compute_weight_ou(path: &PathBundle, kernel: &OuKernelState) -> Result<OuWeight, KernelError> {
    let w = path.grid.weights();
    let ito: Vec<f64> = (0..w.len()).map(|j| w[j] * kernel.eta[j] * path.ito_prefix[j]).collect();
    let cols = kernel.trace_columns();
    let trace: Vec<f64> = (0..w.len()).map(|j| w[j] * cols[j]).collect();
    let term_ito = pairwise_sum(&ito);
    let term_trace = pairwise_sum(&trace);
    let delta_bar = term_ito - term_trace;
    if !delta_bar.is_finite() {
        return Err(KernelError::NonFinite { what: "OU weight" });
    }
    Ok(OuWeight { delta_bar, term_ito, term_trace, g_denominator: kernel.g_denominator })
}

/// Kernel and weight for one simulated path.
pub fn ou_weight(path: &PathBundle, model: &ValidatedOuModel) -> Result<OuWeight, KernelError> {
    let kernel = OuKernelState::from_path(path, model)?;
    compute_weight_ou(path, &kernel)
}
