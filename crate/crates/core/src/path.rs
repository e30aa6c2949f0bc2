//! Volatility path simulation and the pathwise integrals the weights use.
//!
//! Conventions: `dw[i]` is the increment of W̃ over `[t_i, t_{i+1})`;
//! `dt`-integrals use the trapezoid rule on the nodes; `dW̃`-integrals are
//! left-point (Itô) sums.

use crate::grid::TimeGrid;
use crate::model::{ValidatedCirModel, ValidatedOuModel};
use crate::rng::NoiseStream;

/// Floor applied to the CIR variance after each step.
pub const Z_FLOOR: f64 = 1e-12;
/// Largest admissible fraction of floored CIR steps.
pub const FLOOR_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{floored} of {steps} CIR steps hit the floor; grid too coarse")]
    FloorSaturation { floored: usize, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Ou,
    Cir,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Ou => "ou",
            ModelTag::Cir => "cir",
        }
    }
}

/// One simulated volatility trajectory and its pathwise integrals.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub tag: ModelTag,
    pub grid: TimeGrid,
    /// W̃ increments, one per step.
    pub dw: Vec<f64>,
    /// `Y_{t_i}` (OU) or `Z_{t_i}` (CIR) at every node.
    pub states: Vec<f64>,
    /// `(1/T)∫σ²(Y)ds` or `(1/T)∫Z ds`, trapezoid rule.
    pub avg_variance: f64,
    /// `Σ_{i<j} f_i ΔW̃_i` with `f_i = e^{α t_i}` (OU) or `f_i = 1/φ(t_{i+1})` (CIR).
    pub ito_prefix: Vec<f64>,
    /// CIR only: `R_j = Σ_{m<j} dt / Z_m`.
    pub recip_integral: Option<Vec<f64>>,
    pub floored_steps: usize,
}

/// `P_j = Σ_{i<j} f_i ΔW̃_i`, `P_0 = 0`. The integrand may be given at every
/// node (the last value is unused) or once per step.
pub fn ito_prefix_sums(dw: &[f64], integrand: &[f64]) -> Result<Vec<f64>, PathError> {
    let n = dw.len();
    if integrand.len() != n && integrand.len() != n + 1 {
        return Err(PathError::LengthMismatch { expected: n + 1, got: integrand.len() });
    }
    let mut p = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    p.push(acc);
    for (d, f) in dw.iter().zip(integrand) {
        acc += f * d;
        p.push(acc);
    }
    Ok(p)
}

/// Sums consecutive groups of `factor` increments: the coarse-grid path
/// driven by the same Brownian motion.
pub fn coarsen_increments(dw: &[f64], factor: usize) -> Vec<f64> {
    dw.chunks(factor).map(|c| c.iter().sum()).collect()
}

fn draw_increments(grid: &TimeGrid, stream: &mut NoiseStream) -> Vec<f64> {
    let sq = grid.dt().sqrt();
    (0..grid.n_steps()).map(|_| stream.next_normal() * sq).collect()
}

fn trapezoid_mean(grid: &TimeGrid, values: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = values.enumerate().map(|(i, v)| grid.weight(i) * v).collect();
    crate::stats::pairwise_sum(&terms) / grid.maturity()
}

/// Exact OU transition driven by `ξ_i = ΔW̃_i/√dt`:
/// `Y_{i+1} = Y_i e^{-α dt} + k √((1-e^{-2α dt})/(2α)) ξ_i`.
pub fn simulate_ou_path(model: &ValidatedOuModel, grid: &TimeGrid, stream: &mut NoiseStream) -> PathBundle {
    let dw = draw_increments(grid, stream);
    simulate_ou_from_increments(model, grid, dw).expect("increments drawn on this grid")
}

pub fn simulate_ou_from_increments(
    model: &ValidatedOuModel,
    grid: &TimeGrid,
    dw: Vec<f64>,
) -> Result<PathBundle, PathError> {
    let n = grid.n_steps();
    if dw.len() != n {
        return Err(PathError::LengthMismatch { expected: n, got: dw.len() });
    }
    let p = model.params();
    let dt = grid.dt();
    let decay = (-p.alpha * dt).exp();
    let loading = p.k * (-(-2.0 * p.alpha * dt).exp_m1() / (2.0 * p.alpha * dt)).sqrt();
    let mut states = Vec::with_capacity(n + 1);
    let mut y = p.y0;
    states.push(y);
    for d in &dw {
        y = y * decay + loading * d;
        states.push(y);
    }
    let vol = model.vol();
    let avg_variance = trapezoid_mean(grid, states.iter().map(|&y| {
        let s = vol.sigma(y);
        s * s
    }));
    let growth: Vec<f64> = (0..n).map(|i| (p.alpha * grid.time(i)).exp()).collect();
    let ito_prefix = ito_prefix_sums(&dw, &growth)?;
    Ok(PathBundle {
        tag: ModelTag::Ou,
        grid: grid.clone(),
        dw,
        states,
        avg_variance,
        ito_prefix,
        recip_integral: None,
        floored_steps: 0,
    })
}

/// One step of the square-root scheme: `X = √Z` has additive noise,
/// `dX = (q/X − X/2)dt + (k/2)dW̃`, and the drift map
/// `f(x) = e^{-dt/2}[x e^{-a/x²} + √(πa) erf(√a/x)]`, `a = q dt`,
/// satisfies `f′(x) = exp(−dt/2 − q dt/x²)` exactly.
pub fn sqrt_variance_drift_map(x: f64, q: f64, dt: f64) -> f64 {
    let a = q * dt;
    let core = if a > 0.0 {
        x * (-a / (x * x)).exp() + (std::f64::consts::PI * a).sqrt() * libm::erf(a.sqrt() / x)
    } else {
        x
    };
    (-0.5 * dt).exp() * core
}

/// CIR path via the square-root scheme; `Z = X²`, floored at [`Z_FLOOR`].
pub fn simulate_cir_path(
    model: &ValidatedCirModel,
    grid: &TimeGrid,
    stream: &mut NoiseStream,
) -> Result<PathBundle, PathError> {
    let dw = draw_increments(grid, stream);
    simulate_cir_from_increments(model, grid, dw)
}

pub fn simulate_cir_from_increments(
    model: &ValidatedCirModel,
    grid: &TimeGrid,
    dw: Vec<f64>,
) -> Result<PathBundle, PathError> {
    let n = grid.n_steps();
    if dw.len() != n {
        return Err(PathError::LengthMismatch { expected: n, got: dw.len() });
    }
    let p = model.params();
    let dt = grid.dt();
    let q = p.q();
    let x_floor = Z_FLOOR.sqrt();
    let mut states = Vec::with_capacity(n + 1);
    let mut x = p.z0.sqrt();
    let mut floored = 0;
    states.push(p.z0);
    for d in &dw {
        x = sqrt_variance_drift_map(x, q, dt) + 0.5 * p.k * d;
        if !(x > x_floor) {
            x = x_floor;
            floored += 1;
        }
        states.push(x * x);
    }
    if floored as f64 > FLOOR_BUDGET * n as f64 {
        return Err(PathError::FloorSaturation { floored, steps: n });
    }
    let avg_variance = trapezoid_mean(grid, states.iter().copied());
    let mut recip = Vec::with_capacity(n + 1);
    let mut r = 0.0;
    recip.push(r);
    for z in &states[..n] {
        r += dt / z;
        recip.push(r);
    }
    let inv_phi_next: Vec<f64> = (0..n).map(|i| (0.5 * grid.time(i + 1) + q * recip[i + 1]).exp()).collect();
    let ito_prefix = ito_prefix_sums(&dw, &inv_phi_next)?;
    Ok(PathBundle {
        tag: ModelTag::Cir,
        grid: grid.clone(),
        dw,
        states,
        avg_variance,
        ito_prefix,
        recip_integral: Some(recip),
        floored_steps: floored,
    })
}

/// `S_T = s0 exp(rT − ½σ̄²T + σ̄√T ξ)`: the terminal asset given the
/// averaged variance, with `ξ` independent of the volatility driver.
pub fn terminal_asset(avg_variance: f64, s0: f64, r: f64, maturity: f64, xi: f64) -> f64 {
    let sd = (avg_variance * maturity).sqrt();
    s0 * (r * maturity - 0.5 * avg_variance * maturity + sd * xi).exp()
}

pub fn sample_terminal_asset(path: &PathBundle, s0: f64, r: f64, stream: &mut NoiseStream) -> f64 {
    terminal_asset(path.avg_variance, s0, r, path.grid.maturity(), stream.next_normal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use crate::rng::Purpose;

    fn ou_model(k: f64) -> ValidatedOuModel {
        let p = OuParams { alpha: 1.0, k, y0: 0.7, s0: 100.0, r: 0.05, mu: 0.0, maturity: 1.0 };
        validate_ou(p, reference_vol_family(0.1, 0.1).unwrap(), false).unwrap()
    }

    fn cir_model(k: f64, z0: f64) -> ValidatedCirModel {
        let p = CirParams { b: 1.0, k, z0, s0: 100.0, r: 0.05, mu: 0.0, maturity: 1.0 };
        validate_cir(p, false).unwrap()
    }

    #[test]
    fn noiseless_ou_is_exact_decay() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let mut s = NoiseStream::new(1, 0, Purpose::VolatilityDriver);
        let path = simulate_ou_path(&ou_model(0.0), &g, &mut s);
        for (i, y) in path.states.iter().enumerate() {
            let exact = 0.7 * (-g.time(i)).exp();
            assert!((y - exact).abs() < 1e-14, "node {i}");
        }
    }

    #[test]
    fn noiseless_cir_tracks_ode() {
        let g = TimeGrid::new(1.0, 4096).unwrap();
        let path = simulate_cir_from_increments(&cir_model(0.0, 0.3), &g, vec![0.0; 4096]).unwrap();
        for i in (0..=4096).step_by(256) {
            let t = g.time(i);
            let exact = 1.0 + (0.3 - 1.0) * (-t).exp();
            assert!(((path.states[i] - exact) / exact).abs() < 1e-3, "t={t}");
        }
    }

    #[test]
    fn drift_map_derivative_is_exponential() {
        let (q, dt) = (0.49, 1.0 / 512.0);
        for &x in &[0.05, 0.3, 1.0, 2.5] {
            let h = 1e-6 * x;
            let fd = (sqrt_variance_drift_map(x + h, q, dt) - sqrt_variance_drift_map(x - h, q, dt)) / (2.0 * h);
            let exact = (-0.5 * dt - q * dt / (x * x)).exp();
            assert!((fd - exact).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn cir_recip_integral_nondecreasing_and_positive_states() {
        let g = TimeGrid::new(1.0, 512).unwrap();
        let mut s = NoiseStream::new(3, 9, Purpose::VolatilityDriver);
        let path = simulate_cir_path(&cir_model(0.25, 1.0), &g, &mut s).unwrap();
        let r = path.recip_integral.as_ref().unwrap();
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
        assert!(path.states.iter().all(|&z| z > 0.0));
        assert_eq!(path.floored_steps, 0);
    }

    #[test]
    fn floor_saturation_is_reported() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let err = simulate_cir_from_increments(&cir_model(0.25, 1.0), &g, vec![-50.0; 16]).unwrap_err();
        assert!(matches!(err, PathError::FloorSaturation { .. }));
    }

    #[test]
    fn ito_prefix_basic_cases() {
        let dw = [0.1, -0.3, 0.25, 0.05];
        assert_eq!(ito_prefix_sums(&dw, &[0.0; 5]).unwrap(), vec![0.0; 5]);
        let p = ito_prefix_sums(&dw, &[1.0; 4]).unwrap();
        let mut w = 0.0;
        for (j, v) in p.iter().enumerate() {
            assert!((v - w).abs() < 1e-15);
            if j < 4 {
                w += dw[j];
            }
        }
        assert!(matches!(ito_prefix_sums(&dw, &[1.0; 3]), Err(PathError::LengthMismatch { .. })));
    }

    #[test]
    fn ito_prefix_is_linear() {
        let dw = NoiseStream::new(2, 0, Purpose::VolatilityDriver).normals(32);
        let f: Vec<f64> = (0..33).map(|i| (i as f64 * 0.1).sin()).collect();
        let g: Vec<f64> = (0..33).map(|i| (i as f64 * 0.3).cos()).collect();
        let a = 2.0;
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + y).collect();
        let lhs = ito_prefix_sums(&dw, &combo).unwrap();
        let pf = ito_prefix_sums(&dw, &f).unwrap();
        let pg = ito_prefix_sums(&dw, &g).unwrap();
        for j in 0..lhs.len() {
            assert!((lhs[j] - (a * pf[j] + pg[j])).abs() < 1e-13);
        }
    }

    #[test]
    fn terminal_asset_cases() {
        assert_eq!(terminal_asset(0.0, 100.0, 0.05, 1.0, 3.7), 100.0 * 0.05f64.exp());
        let med = terminal_asset(0.04, 100.0, 0.05, 1.0, 0.0);
        assert!((med - 100.0 * (0.05f64 - 0.02).exp()).abs() < 1e-12);
    }

    #[test]
    fn coarsening_sums_groups() {
        assert_eq!(coarsen_increments(&[1.0, 2.0, 3.0, 4.0], 2), vec![3.0, 7.0]);
    }
}
