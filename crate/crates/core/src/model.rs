//! Model parameters, the pluggable volatility function and assumption checks.
//!
//! Two market models share the asset equation `dS = μ S dt + vol · S dW` and
//! differ in the volatility driver (independent of `W`):
//!
//! ```text
//! OU :  dY = -α Y dt + k dW̃,                 vol = σ(Y)
//! CIR:  dZ = (b - Z) dt + k √Z dW̃,           vol = √Z
//! ```
//!
//! Everything downstream is simulated under the minimal martingale measure,
//! where `μ` is replaced by `r`; `mu` is carried only for completeness.

use std::fmt;
use std::sync::Arc;

/// Probe grid used to check the `∀x` assumptions on σ.
pub const PROBE_MIN: f64 = -10.0;
pub const PROBE_MAX: f64 = 10.0;
pub const PROBE_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub alpha: f64,
    pub k: f64,
    pub y0: f64,
    pub s0: f64,
    pub r: f64,
    pub mu: f64,
    pub maturity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    pub b: f64,
    pub k: f64,
    pub z0: f64,
    pub s0: f64,
    pub r: f64,
    pub mu: f64,
    pub maturity: f64,
}

impl CirParams {
    /// `b/2 - k²/8`, the drift constant of `√Z`; positive under Feller.
    pub fn q(&self) -> f64 {
        0.5 * self.b - 0.125 * self.k * self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contract {
    pub strike: f64,
}

impl Contract {
    pub fn new(strike: f64) -> Result<Self, ValidationError> {
        if strike >= 0.0 && strike.is_finite() {
            Ok(Self { strike })
        } else {
            Err(ValidationError::single(Violation::NegativeStrike))
        }
    }
}

/// A twice differentiable volatility function σ of the OU state.
pub trait VolFunction: Send + Sync + fmt::Debug {
    fn sigma(&self, x: f64) -> f64;
    fn sigma_prime(&self, x: f64) -> f64;
    fn sigma_second(&self, x: f64) -> f64;

    /// ν = σ σ′
    fn nu(&self, x: f64) -> f64 {
        self.sigma(x) * self.sigma_prime(x)
    }

    /// ν′ = σ′² + σ σ″
    fn nu_prime(&self, x: f64) -> f64 {
        let d = self.sigma_prime(x);
        d * d + self.sigma(x) * self.sigma_second(x)
    }
}

/// σ together with the constants that witness the growth assumption
/// `c ≤ σ(x) ≤ q (1 + |x|^l)`.
#[derive(Debug, Clone)]
pub struct VolFunctionSpec {
    pub function: Arc<dyn VolFunction>,
    pub lower_bound_c: f64,
    pub q_growth: f64,
    pub l_growth: u32,
}

impl VolFunctionSpec {
    pub fn sigma(&self, x: f64) -> f64 {
        self.function.sigma(x)
    }

    pub fn sigma_prime(&self, x: f64) -> f64 {
        self.function.sigma_prime(x)
    }

    pub fn sigma_second(&self, x: f64) -> f64 {
        self.function.sigma_second(x)
    }

    pub fn nu(&self, x: f64) -> f64 {
        self.function.nu(x)
    }

    pub fn nu_prime(&self, x: f64) -> f64 {
        self.function.nu_prime(x)
    }

    /// Checks the σ assumptions at a single point, appending any violation.
    pub fn check_point(&self, x: f64, out: &mut Vec<Violation>) {
        let s = self.sigma(x);
        if !(s >= self.lower_bound_c) {
            out.push(Violation::SigmaBelowLowerBound { x, sigma: s });
        }
        if !(self.sigma_prime(x) > 0.0) {
            out.push(Violation::NonPositiveSigmaPrime { x });
        }
        if !self.nu(x).is_finite() || !self.nu_prime(x).is_finite() {
            out.push(Violation::NonFiniteNu { x });
        }
    }
}

/// `σ(x) = c + m (x + √(x²+1))`: bounded below by `c`, strictly increasing,
/// smooth and of linear growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceVol {
    pub c: f64,
    pub m: f64,
}

impl ReferenceVol {
    // x + √(x²+1) without cancellation for large negative x
    fn lift(x: f64) -> (f64, f64) {
        let s = x.hypot(1.0);
        let u = if x >= 0.0 { x + s } else { 1.0 / (s - x) };
        (u, s)
    }
}

impl VolFunction for ReferenceVol {
    fn sigma(&self, x: f64) -> f64 {
        self.c + self.m * Self::lift(x).0
    }

    fn sigma_prime(&self, x: f64) -> f64 {
        let (u, s) = Self::lift(x);
        self.m * u / s
    }

    fn sigma_second(&self, x: f64) -> f64 {
        let s2 = x * x + 1.0;
        self.m / (s2 * s2.sqrt())
    }
}

pub fn reference_vol_family(c: f64, m: f64) -> Result<VolFunctionSpec, ValidationError> {
    let mut v = Vec::new();
    if !(c > 0.0 && c.is_finite()) {
        v.push(Violation::NonPositiveParameter { name: "c", value: c });
    }
    if !(m > 0.0 && m.is_finite()) {
        v.push(Violation::NonPositiveParameter { name: "m", value: m });
    }
    if !v.is_empty() {
        return Err(ValidationError { violations: v });
    }
    Ok(VolFunctionSpec {
        function: Arc::new(ReferenceVol { c, m }),
        lower_bound_c: c,
        q_growth: c + 2.0 * m,
        l_growth: 1,
    })
}

/// One violated assumption. `code()` gives the stable machine-readable prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveAlpha(f64),
    NonPositiveK(f64),
    NonPositiveLowerBound(f64),
    NonPositiveMaturity(f64),
    NonPositiveSpot(f64),
    NegativeRate(f64),
    NonPositiveB(f64),
    NonPositiveZ0(f64),
    FellerViolation { k: f64, b: f64 },
    DensityConditionViolation { k: f64, b: f64 },
    SigmaBelowLowerBound { x: f64, sigma: f64 },
    NonPositiveSigmaPrime { x: f64 },
    NonFiniteNu { x: f64 },
    NonPositiveParameter { name: &'static str, value: f64 },
    NonFiniteParameter(&'static str),
    NegativeStrike,
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NonPositiveAlpha(_) => "E_NONPOSITIVE_ALPHA",
            Violation::NonPositiveK(_) => "E_NONPOSITIVE_K",
            Violation::NonPositiveLowerBound(_) => "E_NONPOSITIVE_LOWER_BOUND",
            Violation::NonPositiveMaturity(_) => "E_NONPOSITIVE_MATURITY",
            Violation::NonPositiveSpot(_) => "E_NONPOSITIVE_SPOT",
            Violation::NegativeRate(_) => "E_NEGATIVE_RATE",
            Violation::NonPositiveB(_) => "E_NONPOSITIVE_B",
            Violation::NonPositiveZ0(_) => "E_NONPOSITIVE_Z0",
            Violation::FellerViolation { .. } => "E_FELLER",
            Violation::DensityConditionViolation { .. } => "E_DENSITY_CONDITION",
            Violation::SigmaBelowLowerBound { .. } => "E_SIGMA_BELOW_LOWER_BOUND",
            Violation::NonPositiveSigmaPrime { .. } => "E_NONPOSITIVE_SIGMA_PRIME",
            Violation::NonFiniteNu { .. } => "E_NONFINITE_NU",
            Violation::NonPositiveParameter { .. } => "E_NONPOSITIVE_PARAMETER",
            Violation::NonFiniteParameter(_) => "E_NONFINITE_PARAMETER",
            Violation::NegativeStrike => "E_NEGATIVE_STRIKE",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.code())?;
        match self {
            Violation::NonPositiveAlpha(a) => write!(f, "alpha = {a} <= 0"),
            Violation::NonPositiveK(k) => write!(f, "k = {k} is not admissible"),
            Violation::NonPositiveLowerBound(c) => write!(f, "lower bound c = {c} <= 0"),
            Violation::NonPositiveMaturity(t) => write!(f, "T = {t} <= 0"),
            Violation::NonPositiveSpot(s) => write!(f, "s0 = {s} <= 0"),
            Violation::NegativeRate(r) => write!(f, "r = {r} < 0"),
            Violation::NonPositiveB(b) => write!(f, "b = {b} <= 0"),
            Violation::NonPositiveZ0(z) => write!(f, "z0 = {z} <= 0"),
            Violation::FellerViolation { k, b } => write!(f, "k^2 >= 2*b (k = {k}, b = {b})"),
            Violation::DensityConditionViolation { .. } => write!(f, "6*k^2 >= b"),
            Violation::SigmaBelowLowerBound { x, sigma } => {
                write!(f, "sigma({x}) = {sigma} below lower bound")
            }
            Violation::NonPositiveSigmaPrime { x } => write!(f, "sigma'({x}) <= 0"),
            Violation::NonFiniteNu { x } => write!(f, "nu or nu' not finite at {x}"),
            Violation::NonPositiveParameter { name, value } => write!(f, "{name} = {value} <= 0"),
            Violation::NonFiniteParameter(name) => write!(f, "{name} is not finite"),
            Violation::NegativeStrike => write!(f, "strike < 0"),
        }
    }
}

/// Structured rejection; never empty.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} assumption violation(s): {}", violations.len(), first(violations))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

fn first(v: &[Violation]) -> String {
    v.first().map(|x| x.to_string()).unwrap_or_default()
}

impl ValidationError {
    fn single(v: Violation) -> Self {
        Self { violations: vec![v] }
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code() == code)
    }
}

#[derive(Debug, Clone)]
pub struct ValidatedOuModel {
    params: OuParams,
    vol: VolFunctionSpec,
    density_ready: bool,
}

impl ValidatedOuModel {
    pub fn params(&self) -> &OuParams {
        &self.params
    }

    pub fn vol(&self) -> &VolFunctionSpec {
        &self.vol
    }

    /// True when the density hypotheses hold (in particular `k > 0`).
    pub fn density_ready(&self) -> bool {
        self.density_ready
    }
}

#[derive(Debug, Clone)]
pub struct ValidatedCirModel {
    params: CirParams,
    density_ready: bool,
}

impl ValidatedCirModel {
    pub fn params(&self) -> &CirParams {
        &self.params
    }

    pub fn density_ready(&self) -> bool {
        self.density_ready
    }
}

fn check_finite(name: &'static str, x: f64, out: &mut Vec<Violation>) -> bool {
    if x.is_finite() {
        true
    } else {
        out.push(Violation::NonFiniteParameter(name));
        false
    }
}

fn check_common(s0: f64, r: f64, mu: f64, maturity: f64, out: &mut Vec<Violation>) {
    if check_finite("s0", s0, out) && s0 <= 0.0 {
        out.push(Violation::NonPositiveSpot(s0));
    }
    if check_finite("r", r, out) && r < 0.0 {
        out.push(Violation::NegativeRate(r));
    }
    check_finite("mu", mu, out);
    if check_finite("T", maturity, out) && maturity <= 0.0 {
        out.push(Violation::NonPositiveMaturity(maturity));
    }
}

/// Validates the OU model. `k = 0` (a deterministic volatility path) is
/// accepted for pricing only; density mode needs `k > 0`.
pub fn validate_ou(
    params: OuParams,
    vol: VolFunctionSpec,
    density_mode: bool,
) -> Result<ValidatedOuModel, ValidationError> {
    let mut v = Vec::new();
    if check_finite("alpha", params.alpha, &mut v) && params.alpha <= 0.0 {
        v.push(Violation::NonPositiveAlpha(params.alpha));
    }
    if check_finite("k", params.k, &mut v) && (params.k < 0.0 || (density_mode && params.k == 0.0)) {
        v.push(Violation::NonPositiveK(params.k));
    }
    check_finite("y0", params.y0, &mut v);
    check_common(params.s0, params.r, params.mu, params.maturity, &mut v);
    if !(vol.lower_bound_c > 0.0) {
        v.push(Violation::NonPositiveLowerBound(vol.lower_bound_c));
    } else {
        let mut probe = Vec::new();
        let step = (PROBE_MAX - PROBE_MIN) / (PROBE_POINTS - 1) as f64;
        for i in 0..PROBE_POINTS {
            vol.check_point(PROBE_MIN + step * i as f64, &mut probe);
        }
        if params.y0.is_finite() {
            vol.check_point(params.y0, &mut probe);
        }
        // one entry per kind keeps the report readable
        probe.dedup_by(|a, b| std::mem::discriminant(a) == std::mem::discriminant(b));
        for p in probe {
            if !v.iter().any(|q| q.code() == p.code()) {
                v.push(p);
            }
        }
    }
    if v.is_empty() {
        Ok(ValidatedOuModel { params, vol, density_ready: params.k > 0.0 })
    } else {
        Err(ValidationError { violations: v })
    }
}

/// Validates the CIR model: `k² < 2b` always, `6k² < b` in density mode.
pub fn validate_cir(params: CirParams, density_mode: bool) -> Result<ValidatedCirModel, ValidationError> {
    let mut v = Vec::new();
    let b_ok = check_finite("b", params.b, &mut v);
    if b_ok && params.b <= 0.0 {
        v.push(Violation::NonPositiveB(params.b));
    }
    let k_ok = check_finite("k", params.k, &mut v);
    if k_ok && (params.k < 0.0 || (density_mode && params.k == 0.0)) {
        v.push(Violation::NonPositiveK(params.k));
    }
    if check_finite("z0", params.z0, &mut v) && params.z0 <= 0.0 {
        v.push(Violation::NonPositiveZ0(params.z0));
    }
    check_common(params.s0, params.r, params.mu, params.maturity, &mut v);
    if b_ok && k_ok {
        let k2 = params.k * params.k;
        if k2 >= 2.0 * params.b {
            v.push(Violation::FellerViolation { k: params.k, b: params.b });
        }
        if density_mode && 6.0 * k2 >= params.b {
            v.push(Violation::DensityConditionViolation { k: params.k, b: params.b });
        }
    }
    if v.is_empty() {
        let k2 = params.k * params.k;
        let density_ready = params.k > 0.0 && 6.0 * k2 < params.b;
        Ok(ValidatedCirModel { params, density_ready })
    } else {
        Err(ValidationError { violations: v })
    }
}
