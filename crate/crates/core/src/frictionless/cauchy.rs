use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Inputs are clamped to `[P_CLAMP, 1 - P_CLAMP]` before the tangent map.
pub const P_CLAMP: f64 = 1e-15;

/// Weighted Cauchy combination. Returns `(T, p)` with
/// `T = Σ w_i tan(π(1/2 - p_i))` and `p = 1/2 - arctan(T)/π`.
pub fn cauchy_combine(pvalues: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if pvalues.is_empty() {
        return invalid("no p-values to combine");
    }
    if pvalues.len() != weights.len() {
        return invalid("one weight per p-value is required");
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return invalid("weights must be non-negative");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return invalid(format!("weights must sum to one, got {total}"));
    }
    if pvalues.iter().any(|p| p.is_nan()) {
        return invalid("p-value is NaN");
    }
    let t: f64 = pvalues
        .iter()
        .zip(weights)
        .map(|(&p, &w)| w * (PI * (0.5 - p.clamp(P_CLAMP, 1.0 - P_CLAMP))).tan())
        .sum();
    let p = (0.5 - t.atan() / PI).clamp(0.0, 1.0);
    Ok((t, p))
}

pub fn cauchy_combine_equal(pvalues: &[f64]) -> Result<(f64, f64)> {
    let w = vec![1.0 / pvalues.len().max(1) as f64; pvalues.len()];
    cauchy_combine(pvalues, &w)
}

/// Upper `alpha` quantile of the standard Cauchy law, `cot(πα)`.
pub fn cauchy_critical(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("level must lie in (0,1), got {alpha}"));
    }
    let x = PI * alpha;
    Ok(x.cos() / x.sin())
}
