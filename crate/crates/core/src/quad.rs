//! Trapezoid quadrature on arbitrary (sorted) abscissae.

use crate::stats::pairwise_sum;

/// Trapezoid weights for the nodes `x`, so `Σ wᵢ f(xᵢ) ≈ ∫ f`.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (x[i] - x[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "trapezoid: length mismatch");
    let terms: Vec<f64> = trapezoid_weights(x).iter().zip(y).map(|(w, f)| w * f).collect();
    pairwise_sum(&terms)
}

/// `∫_{x_i}^{x_end} f` for every node `i` by the trapezoid rule.
pub fn trapezoid_tail(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut tail = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        tail[i] = tail[i + 1] + 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    tail
}
