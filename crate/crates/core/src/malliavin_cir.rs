//! Malliavin weight for the averaged variance `σ̃² = (1/T)∫Z ds` of the CIR
//! model.
//!
//! With `q = b/2 − k²/8`, `φ(t) = exp(−t/2 − q∫_0^t ds/Z_s)` and the cocycle
//! `ψ_{h,t} = φ(t)/φ(h)`,
//!
//! ```text
//! D_hZ_t = k ψ_{h,t} √Z_t 1{h<t}
//! I      = ∫∫ √Z_{t₁}√Z_{t₂} ∫_0^{t₁∧t₂} ψ_{h,t₁}ψ_{h,t₂} dh dt₁dt₂
//!        = ∫∫ g(t₁) g(t₂) F(t₁∧t₂) dt₁dt₂,   g = √Z φ,  F(t) = ∫_0^t φ^{-2}
//! Ψ_{h,t} = ψ_{h,t} / I
//! δ̃ = (T/k)∫ √Z_t δ(Ψ_{·,t}1{·<t}) dt − (T/2)∫∫_{h<t} Ψ_{h,t}ψ_{h,t} dh dt
//! ```
//!
//! `Ψ_{·,t}` anticipates (it sees the whole path through `I` and `Z` after
//! `h`), so its integral is a Skorokhod integral:
//! `δ(Ψ_{·,t}1{·<t}) = (φ(t)/I)∫_0^t φ(h)^{-1}dW̃_h − ∫_0^t D_h(φ(t)/I) φ(h)^{-1} dh`.
//! The second piece is reported as `anticipation`.
//!
//! On the grid, `φ` is the exact tangent of the square-root scheme (see
//! [`crate::path::sqrt_variance_drift_map`]), `R` is a left-point sum, the
//! increment `i` pairs with `φ(t_{i+1})` (known at `t_i`), and `F_j =
//! dt Σ_{i<j} φ(t_{i+1})^{-2}`. The weight is then the exact discrete
//! Skorokhod integral of the trapezoid `σ̃²`.
//!
//! All `φ` values are stored scaled by `e^{-shift}`; every output is a ratio
//! in which the shift cancels.

use crate::malliavin_ou::KernelError;
use crate::model::ValidatedCirModel;
use crate::path::PathBundle;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone)]
pub struct CirKernelState {
    pub q: f64,
    /// `log φ(t_j) = −t_j/2 − q R_j`.
    pub log_phi: Vec<f64>,
    pub shift: f64,
    /// `φ(t_j) e^{-shift}`.
    pub phi: Vec<f64>,
    /// `e^{shift}/φ(t_{i+1})`, one per increment.
    pub inv_phi_next: Vec<f64>,
    pub sqrt_z: Vec<f64>,
    /// `F_j e^{2·shift}`.
    pub f_prefix: Vec<f64>,
    /// Denominator `I` (shift invariant).
    pub i_denominator: f64,
    k: f64,
    maturity: f64,
    dt: f64,
}

/// `log φ` on the nodes and the scaled `F` prefix.
pub fn compute_phi_and_f(path: &PathBundle, q: f64) -> Result<(Vec<f64>, f64, Vec<f64>), KernelError> {
    let recip = path.recip_integral.as_ref().ok_or(KernelError::NonFinite { what: "R (not a CIR path)" })?;
    let dt = path.grid.dt();
    let log_phi: Vec<f64> = recip.iter().enumerate().map(|(j, r)| -0.5 * dt * j as f64 - q * r).collect();
    if log_phi.iter().any(|v| !v.is_finite()) {
        return Err(KernelError::NonFinite { what: "log phi" });
    }
    let shift = 0.5 * (log_phi[0] + log_phi[log_phi.len() - 1]);
    let n = log_phi.len() - 1;
    let mut f = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    f.push(acc);
    for i in 0..n {
        let rho = (shift - log_phi[i + 1]).exp();
        acc += dt * rho * rho;
        f.push(acc);
    }
    if !acc.is_finite() {
        return Err(KernelError::Overflow { what: "F" });
    }
    Ok((log_phi, shift, f))
}

impl CirKernelState {
    pub fn from_path(path: &PathBundle, model: &ValidatedCirModel) -> Result<Self, KernelError> {
        if !model.density_ready() {
            return Err(KernelError::NotDensityReady);
        }
        let p = model.params();
        let q = p.q();
        let (log_phi, shift, f_prefix) = compute_phi_and_f(path, q)?;
        let phi: Vec<f64> = log_phi.iter().map(|l| (l - shift).exp()).collect();
        let inv_phi_next: Vec<f64> = log_phi[1..].iter().map(|l| (shift - l).exp()).collect();
        if phi.iter().chain(&inv_phi_next).any(|v| !v.is_finite()) {
            return Err(KernelError::Overflow { what: "phi" });
        }
        let sqrt_z: Vec<f64> = path.states.iter().map(|z| z.sqrt()).collect();
        let w = path.grid.weights();
        let g: Vec<f64> = sqrt_z.iter().zip(&phi).map(|(a, b)| a * b).collect();
        let i_denominator = compute_denominator_i(&w, &g, &f_prefix)?;
        Ok(Self {
            q,
            log_phi,
            shift,
            phi,
            inv_phi_next,
            sqrt_z,
            f_prefix,
            i_denominator,
            k: p.k,
            maturity: p.maturity,
            dt: path.grid.dt(),
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `ψ` between nodes `h ≤ t`.
    pub fn psi_nodes(&self, h: usize, t: usize) -> f64 {
        (self.log_phi[t] - self.log_phi[h]).exp()
    }

    /// `ψ_{i,t}` for the increment `i` (paired with node `i + 1`).
    pub fn psi(&self, i: usize, t: usize) -> f64 {
        self.psi_nodes(i + 1, t)
    }

    pub fn big_psi(&self, i: usize, t: usize) -> f64 {
        self.psi(i, t) / self.i_denominator
    }

    /// Unscaled `F(t_j) = ∫_0^{t_j} φ^{-2}`.
    pub fn f_unscaled(&self, j: usize) -> f64 {
        self.f_prefix[j] * (-2.0 * self.shift).exp()
    }

    /// `g_j = √Z_j φ̂_j`.
    pub fn g(&self) -> Vec<f64> {
        self.sqrt_z.iter().zip(&self.phi).map(|(a, b)| a * b).collect()
    }
}

/// `I = Σ_{j,l} w_j w_l g_j g_l F_{min(j,l)}` via prefix sums.
pub fn compute_denominator_i(weights: &[f64], g: &[f64], f_prefix: &[f64]) -> Result<f64, KernelError> {
    let n = g.len();
    let mut prefix = 0.0;
    let mut terms = Vec::with_capacity(n);
    for l in 0..n {
        let wg = weights[l] * g[l];
        terms.push(2.0 * wg * prefix + wg * wg * f_prefix[l]);
        prefix += wg * f_prefix[l];
    }
    let i = pairwise_sum(&terms);
    if !i.is_finite() {
        return Err(KernelError::NonFinite { what: "I" });
    }
    if i <= 0.0 {
        return Err(KernelError::NonPositiveDenominator { value: i });
    }
    Ok(i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirWeight {
    pub delta_tilde: f64,
    /// `(T/k)∫√Z_t (φ(t)/I)∫_0^t φ^{-1}dW̃ dt` (Itô part).
    pub term_ito: f64,
    /// `(T/2)∫∫ Ψψ dh dt`.
    pub term_trace: f64,
    /// `(T/k)∫√Z_t ∫_0^t D_h(φ(t)/I) φ(h)^{-1} dh dt`.
    pub anticipation: f64,
    pub i_denominator: f64,
}

fn suffix(values: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n + 1];
    for (idx, v) in values.enumerate().collect::<Vec<_>>().into_iter().rev() {
        out[idx] = out[idx + 1] + v;
    }
    out
}

pub fn compute_weight_cir(path: &PathBundle, kernel: &CirKernelState) -> Result<CirWeight, KernelError> {
    let w = path.grid.weights();
    let nodes = w.len();
    let n = nodes - 1;
    let dt = kernel.dt;
    let t_mat = kernel.maturity;
    let k = kernel.k;
    let big_i = kernel.i_denominator;
    let phi = &kernel.phi;
    let rho = &kernel.inv_phi_next;
    let g = kernel.g();

    // A_j = Σ_{m<j} c_m φ̂_m,  c_m = q dt Z_m^{-3/2}
    let mut a = Vec::with_capacity(nodes);
    let mut acc = 0.0;
    for j in 0..nodes {
        a.push(acc);
        let z = path.states[j];
        acc += kernel.q * dt / (z * z.sqrt()) * phi[j];
    }

    let gs = suffix((0..nodes).map(|j| w[j] * g[j]));
    let phi2s = suffix((0..nodes).map(|j| w[j] * phi[j] * phi[j]));
    let gas = suffix((0..nodes).map(|j| w[j] * g[j] * a[j]));

    let mut p_acc = 0.0;
    let mut ito_terms = Vec::with_capacity(nodes);
    for j in 0..nodes {
        ito_terms.push(w[j] * g[j] * p_acc);
        if j < n {
            p_acc += rho[j] * path.dw[j];
        }
    }
    let term_ito = t_mat / (k * big_i) * pairwise_sum(&ito_terms);

    let trace_terms: Vec<f64> = (0..nodes).map(|j| w[j] * phi[j] * phi[j] * kernel.f_prefix[j]).collect();
    let term_trace = t_mat / (2.0 * big_i) * pairwise_sum(&trace_terms);

    // sums over p = i..n-1 of ρ_p² Gs_{p+1}·(Φ2s, GAs, A Gs)_{p+1}
    let s1 = suffix((0..n).map(|p| rho[p] * rho[p] * gs[p + 1] * phi2s[p + 1]));
    let s2 = suffix((0..n).map(|p| rho[p] * rho[p] * gs[p + 1] * gas[p + 1]));
    let s4 = suffix((0..n).map(|p| rho[p] * rho[p] * a[p + 1] * gs[p + 1] * gs[p + 1]));

    let mut lower = 0.0;
    let mut ant_terms = Vec::with_capacity(n);
    for i in 0..n {
        let m = i + 1;
        let r2 = rho[i] * rho[i];
        let tangent = gas[m] - a[m] * gs[m];
        let e = 0.5 * phi2s[m] + tangent;
        let d_i = 2.0 * dt * k * rho[i] * (lower * e + 0.5 * s1[i] + s2[i] - s4[i]);
        let part_tangent = t_mat / big_i * r2 * tangent;
        let part_norm = -(t_mat / k) * rho[i] * gs[m] * d_i / (big_i * big_i);
        ant_terms.push(dt * (part_tangent + part_norm));
        lower += r2 * gs[m];
    }
    let anticipation = pairwise_sum(&ant_terms);
    let delta_tilde = term_ito - term_trace - anticipation;
    if !delta_tilde.is_finite() {
        return Err(KernelError::NonFinite { what: "CIR weight" });
    }
    Ok(CirWeight { delta_tilde, term_ito, term_trace, anticipation, i_denominator: big_i })
}

pub fn cir_weight(path: &PathBundle, model: &ValidatedCirModel) -> Result<CirWeight, KernelError> {
    let kernel = CirKernelState::from_path(path, model)?;
    compute_weight_cir(path, &kernel)
}
