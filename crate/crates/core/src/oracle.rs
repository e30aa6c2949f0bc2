//! Slow reference implementations of the kernel quantities.
//!
//! Each function evaluates a quantity by direct summation (or by finite
//! differences of the simulated path) without the prefix-sum factorizations
//! of the production code. They exist for tests and for the self-check.

use crate::grid::TimeGrid;
use crate::malliavin_cir::CirKernelState;
use crate::model::{ValidatedCirModel, ValidatedOuModel};
use crate::path::{simulate_cir_from_increments, simulate_ou_from_increments, PathBundle};

fn k_ou(alpha: f64, t1: f64, t2: f64) -> f64 {
    (-alpha * (t1 - t2).abs()).exp() - (-alpha * (t1 + t2)).exp()
}

/// `G = Σ_{j,l} w_j w_l K(t_j,t_l) ν_j ν_l`, O(n²).
pub fn ou_denominator_brute(grid: &TimeGrid, nu: &[f64], alpha: f64) -> f64 {
    let t = grid.times();
    let w = grid.weights();
    let mut s = 0.0;
    for j in 0..t.len() {
        for l in 0..t.len() {
            s += w[j] * w[l] * k_ou(alpha, t[j], t[l]) * nu[j] * nu[l];
        }
    }
    s
}

/// `C(t_i) = Σ_l Σ_{j>i} w_l w_j K(t_l,t_j) ν_l e^{-α t_j} ν′_j`, O(n²) per node.
pub fn ou_c_of_h_brute(grid: &TimeGrid, nu: &[f64], nu_prime: &[f64], alpha: f64, i: usize) -> f64 {
    let t = grid.times();
    let w = grid.weights();
    let mut s = 0.0;
    for l in 0..t.len() {
        for j in i + 1..t.len() {
            s += w[l] * w[j] * k_ou(alpha, t[l], t[j]) * nu[l] * (-alpha * t[j]).exp() * nu_prime[j];
        }
    }
    s
}

/// `D_{t_i}η_{t_j}` from the unreduced form: differentiate `ν(Y_{t₁})` and
/// `ν(Y_{t₂})` separately inside the denominator double sum.
pub fn ou_d_eta_brute(
    grid: &TimeGrid,
    nu: &[f64],
    nu_prime: &[f64],
    alpha: f64,
    norm_factor: f64,
    i: usize,
    j: usize,
) -> f64 {
    let t = grid.times();
    let w = grid.weights();
    let n = t.len();
    let tangent = |m: usize| if i < m { (-alpha * (t[m] - t[i])).exp() } else { 0.0 };
    let g = ou_denominator_brute(grid, nu, alpha);
    let mut dg = 0.0;
    for a in 0..n {
        for b in 0..n {
            let kk = w[a] * w[b] * k_ou(alpha, t[a], t[b]);
            dg += kk * nu_prime[a] * tangent(a) * nu[b];
            dg += kk * nu[a] * nu_prime[b] * tangent(b);
        }
    }
    let ge = norm_factor * g;
    let scale = alpha * grid.maturity() * (-alpha * t[j]).exp();
    scale * (nu_prime[j] * tangent(j) / ge - nu[j] * norm_factor * dg / (ge * ge))
}

/// `δ(ζ) = Σ ζ_i ΔW̃_i − dt Σ ∂ζ_i/∂ΔW̃_i` for a functional `ζ` of the
/// increments, the diagonal derivative by central differences.
pub fn discrete_skorokhod_fd(dw: &[f64], dt: f64, eps: f64, zeta: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let z0 = zeta(dw);
    let mut ito = 0.0;
    let mut trace = 0.0;
    for i in 0..dw.len() {
        ito += z0[i] * dw[i];
        let mut up = dw.to_vec();
        let mut dn = dw.to_vec();
        up[i] += eps;
        dn[i] -= eps;
        trace += (zeta(&up)[i] - zeta(&dn)[i]) / (2.0 * eps);
    }
    ito - dt * trace
}

fn normalized(d: Vec<f64>, dt: f64) -> Vec<f64> {
    let norm: f64 = d.iter().map(|v| v * v * dt).sum();
    d.into_iter().map(|v| v / norm).collect()
}

/// `ζ = Dσ̄²/‖Dσ̄²‖²` for the OU path driven by `dw`, with `Dσ̄²` by the
/// chain rule through the exact transition, O(n²).
pub fn ou_direction(model: &ValidatedOuModel, grid: &TimeGrid, dw: &[f64]) -> Vec<f64> {
    let path = simulate_ou_from_increments(model, grid, dw.to_vec()).expect("grid-sized increments");
    let p = model.params();
    let dt = grid.dt();
    let decay = (-p.alpha * dt).exp();
    let loading = p.k * (-(-2.0 * p.alpha * dt).exp_m1() / (2.0 * p.alpha * dt)).sqrt();
    let n = grid.n_steps();
    let vol = model.vol();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in i + 1..=n {
                let dy = loading * decay.powi((j - i - 1) as i32);
                s += grid.weight(j) * 2.0 * vol.nu(path.states[j]) * dy;
            }
            s / grid.maturity()
        })
        .collect();
    normalized(d, dt)
}

pub fn ou_weight_finite_difference(model: &ValidatedOuModel, grid: &TimeGrid, dw: &[f64], eps: f64) -> f64 {
    discrete_skorokhod_fd(dw, grid.dt(), eps, |x| ou_direction(model, grid, x))
}

/// `ζ = Dσ̃²/‖Dσ̃²‖²` for the CIR path: the tangent of `X = √Z` is pushed
/// step by step through the derivative of the one-step map, O(n²).
pub fn cir_direction(model: &ValidatedCirModel, grid: &TimeGrid, dw: &[f64]) -> Vec<f64> {
    let path = simulate_cir_from_increments(model, grid, dw.to_vec()).expect("valid CIR path");
    let p = model.params();
    let (q, dt) = (p.q(), grid.dt());
    let n = grid.n_steps();
    let x: Vec<f64> = path.states.iter().map(|z| z.sqrt()).collect();
    let slope: Vec<f64> = x.iter().map(|&v| (-0.5 * dt - q * dt / (v * v)).exp()).collect();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let mut tangent = 0.5 * p.k;
            let mut s = 0.0;
            for m in i + 1..=n {
                s += grid.weight(m) * 2.0 * x[m] * tangent;
                if m < n {
                    tangent *= slope[m];
                }
            }
            s / grid.maturity()
        })
        .collect();
    normalized(d, dt)
}

pub fn cir_weight_finite_difference(model: &ValidatedCirModel, grid: &TimeGrid, dw: &[f64], eps: f64) -> f64 {
    discrete_skorokhod_fd(dw, grid.dt(), eps, |x| cir_direction(model, grid, x))
}

/// `I = Σ_{j,l} w_j w_l √Z_j √Z_l Σ_{i<min(j,l)} dt ψ_{i,j} ψ_{i,l}`, O(n³).
pub fn cir_denominator_brute(kernel: &CirKernelState, grid: &TimeGrid) -> f64 {
    let w = grid.weights();
    let dt = grid.dt();
    let nodes = w.len();
    let mut s = 0.0;
    for j in 0..nodes {
        for l in 0..nodes {
            let mut inner = 0.0;
            for i in 0..j.min(l) {
                inner += dt * kernel.psi(i, j) * kernel.psi(i, l);
            }
            s += w[j] * w[l] * kernel.sqrt_z[j] * kernel.sqrt_z[l] * inner;
        }
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct CirTermsBrute {
    pub term_ito: f64,
    pub term_trace: f64,
    pub anticipation: f64,
}

/// The three parts of the CIR weight by direct sums over `(i, j)` and
/// explicit derivatives of `log φ` and `I`, O(n³).
pub fn cir_weight_terms_brute(kernel: &CirKernelState, path: &PathBundle) -> CirTermsBrute {
    let grid = &path.grid;
    let w = grid.weights();
    let dt = grid.dt();
    let t_mat = grid.maturity();
    let nodes = w.len();
    let n = nodes - 1;
    let q = kernel.q;
    let sz = &kernel.sqrt_z;
    let i_brute = cir_denominator_brute(kernel, grid);
    let k = kernel.k();

    // D_i log φ_m = q dt Σ_{i<m'<m} D_iZ_{m'} / Z_{m'}², D_iZ = k √Z ψ
    let mut dlog = vec![vec![0.0; nodes]; n];
    for (i, row) in dlog.iter_mut().enumerate() {
        let mut acc = 0.0;
        for m in i + 1..nodes {
            row[m] = acc;
            let z = path.states[m];
            acc += q * dt * k * sz[m] * kernel.psi(i, m) / (z * z);
        }
    }
    let d_sqrt_z = |i: usize, m: usize| if m > i { 0.5 * k * kernel.psi(i, m) } else { 0.0 };
    // S_p = Σ_{j>p} w_j √Z_j ψ_{p,j},  I = dt Σ_p S_p²
    let s_of = |p: usize| (p + 1..nodes).map(|j| w[j] * sz[j] * kernel.psi(p, j)).sum::<f64>();
    let d_i_big = |i: usize| {
        let mut s = 0.0;
        for p in 0..n {
            let mut ds = 0.0;
            for j in p + 1..nodes {
                let dlog_psi = dlog[i][j] - dlog[i][p + 1];
                ds += w[j] * (d_sqrt_z(i, j) * kernel.psi(p, j) + sz[j] * kernel.psi(p, j) * dlog_psi);
            }
            s += 2.0 * dt * s_of(p) * ds;
        }
        s
    };

    let mut term_ito = 0.0;
    let mut term_trace = 0.0;
    for j in 0..nodes {
        for i in 0..j {
            let big_psi = kernel.psi(i, j) / i_brute;
            term_ito += w[j] * sz[j] * big_psi * path.dw[i];
            term_trace += w[j] * dt * big_psi * kernel.psi(i, j);
        }
    }
    term_ito *= t_mat / k;
    term_trace *= 0.5 * t_mat;

    let mut anticipation = 0.0;
    for i in 0..n {
        let di = d_i_big(i);
        for j in i + 1..nodes {
            let psi = kernel.psi(i, j);
            let d_big_psi = psi * dlog[i][j] / i_brute - psi * di / (i_brute * i_brute);
            anticipation += dt * (t_mat / k) * w[j] * sz[j] * d_big_psi;
        }
    }
    CirTermsBrute { term_ito, term_trace, anticipation }
}

/// `Φ` from its Taylor series `½ + φ(x) Σ x^{2n+1}/(2n+1)!!`, independent
/// of `erfc`; accurate to rounding for `|x| < 6`.
pub fn norm_cdf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        n += 2.0;
        term *= x * x / n;
        sum += term;
    }
    0.5 + sum * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
