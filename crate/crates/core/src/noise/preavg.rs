use serde::{Deserialize, Serialize};

use crate::error::{invalid, JumpError, Result};
use crate::model::{increments, JumpTestReport, Method, ObservedPath};
use crate::numerics::{tree_sum, two_sided_normal_pvalue};
use crate::scalar::Real;

use super::rho::rho_coefficients;
use super::weights::{build_weights, PreAveragingWeights, WeightKind};

/// Tuning of the pre-averaged ratio test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaConfig {
    pub p: u32,
    /// `k_n √Δ_n` on the grid the configuration was built for.
    pub theta: f64,
    pub k_n: usize,
    /// Block length of the self-normalizer.
    pub r_n: usize,
    pub g: PreAveragingWeights,
    pub h: PreAveragingWeights,
    /// `ḡ(2)/h̄(2)`.
    pub gamma: f64,
    /// `ḡ(p)/h̄(p)`.
    pub gamma_prime: f64,
    /// `γ^{p/2}/γ'`, the continuous-path limit of the ratio.
    pub gamma_second: f64,
}

impl PaConfig {
    pub fn new(
        p: u32,
        k_n: usize,
        r_n: usize,
        g: WeightKind,
        h: WeightKind,
        delta: f64,
    ) -> Result<Self> {
        if p < 4 || p % 2 != 0 {
            return invalid(format!("power must be even and >= 4, got {p}"));
        }
        if r_n <= k_n {
            return invalid(format!("block length r_n = {r_n} must exceed k_n = {k_n}"));
        }
        let g = build_weights(g, k_n)?;
        let h = build_weights(h, k_n)?;
        let gamma = g.bar(2.0) / h.bar(2.0);
        let gamma_prime = g.bar(p as f64) / h.bar(p as f64);
        let gamma_second = gamma.powi(p as i32 / 2) / gamma_prime;
        if !(gamma_second > 1.0) {
            return invalid(format!(
                "weight pair gives γ'' = {gamma_second}; the ratio needs γ'' > 1"
            ));
        }
        Ok(Self {
            p,
            theta: k_n as f64 * delta.sqrt(),
            k_n,
            r_n,
            g,
            h,
            gamma,
            gamma_prime,
            gamma_second,
        })
    }

    /// `k_n = ⌈θ/√Δ_n⌉` and `r_n = ⌈Δ_n^{-a}⌉` with sine / sine-squared
    /// weights.
    pub fn from_rates(p: u32, theta: f64, a: f64, delta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return invalid("theta must be positive");
        }
        if !(a > 0.75 && a < 1.0) {
            return invalid(format!("block exponent must lie in (3/4, 1), got {a}"));
        }
        let k_n = (theta / delta.sqrt()).ceil() as usize;
        let r_n = delta.powf(-a).ceil() as usize;
        Self::new(p, k_n, r_n, WeightKind::Sine, WeightKind::SinePower { a: 2.0 }, delta)
    }
}

/// Pre-averaged returns `Ȳ_i = Σ_{j=1}^{k_n-1} φ_j Δ_{i+j}Y` and the noise
/// proxies `Ŷ_i = Σ_{j=1}^{k_n} (Δ_jφ Δ_{i+j}Y)²`, for `i = 0..=n-k_n`.
pub fn preaveraged_series<T: Real>(
    y: &ObservedPath<T>,
    w: &PreAveragingWeights,
) -> Result<(Vec<T>, Vec<T>)> {
    preaverage_increments(&y.increments(), w)
}

fn preaverage_increments<T: Real>(
    inc: &[T],
    w: &PreAveragingWeights,
) -> Result<(Vec<T>, Vec<T>)> {
    let (n, k) = (inc.len(), w.k_n);
    if n < k {
        return Err(JumpError::InsufficientData { needed: k + 1, got: n + 1 });
    }
    let phi: Vec<T> = w.phi.iter().map(|&x| T::lit(x)).collect();
    let dphi: Vec<T> = w.dphi.iter().map(|&x| T::lit(x)).collect();
    let windows = n - k + 1;
    let mut bar = Vec::with_capacity(windows);
    let mut hat = Vec::with_capacity(windows);
    for i in 0..windows {
        // Δ_{i+j}Y is inc[i + j - 1].
        let seg = &inc[i..i + k];
        let b = (1..k).fold(T::zero(), |acc, j| acc + phi[j] * seg[j - 1]);
        let h = (1..=k).fold(T::zero(), |acc, j| {
            let t = dphi[j - 1] * seg[j - 1];
            acc + t * t
        });
        bar.push(b);
        hat.push(h);
    }
    Ok((bar, hat))
}

/// Noise-corrected window contributions `Ψ_i(φ) = Σ_l ρ_l |Ȳ_i|^{p-2l} Ŷ_i^l`.
fn window_contributions<T: Real>(
    inc: &[T],
    w: &PreAveragingWeights,
    rho: &[f64],
    p: u32,
) -> Result<Vec<f64>> {
    let (bar, hat) = preaverage_increments(inc, w)?;
    Ok(bar
        .iter()
        .zip(&hat)
        .map(|(&b, &h)| {
            let (b, h) = (b.as_f64(), h.as_f64());
            rho.iter()
                .enumerate()
                .map(|(l, r)| r * b.abs().powi((p - 2 * l as u32) as i32) * h.powi(l as i32))
                .sum()
        })
        .collect())
}

/// Increments rescaled by their largest magnitude; every PA quantity is
/// homogeneous of degree `p`, so the ratio is unaffected.
fn normalized_increments<T: Real>(y: &ObservedPath<T>) -> Result<Vec<T>> {
    let inc = increments(y.values());
    let scale = inc.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return Err(JumpError::DegeneratePath("all increments are zero".into()));
    }
    Ok(inc.into_iter().map(|x| x / scale).collect())
}

struct PaParts {
    psi_g: Vec<f64>,
    psi_h: Vec<f64>,
    v_g: f64,
    v_h: f64,
}

fn pa_parts<T: Real>(y: &ObservedPath<T>, cfg: &PaConfig) -> Result<PaParts> {
    let inc = normalized_increments(y)?;
    let rho: Vec<f64> = rho_coefficients(cfg.p)?;
    let psi_g = window_contributions(&inc, &cfg.g, &rho, cfg.p)?;
    let psi_h = window_contributions(&inc, &cfg.h, &rho, cfg.p)?;
    let v_g = tree_sum(&psi_g);
    let v_h = tree_sum(&psi_h);
    if v_h == 0.0 || !v_h.is_finite() {
        return Err(JumpError::DegeneratePath("pre-averaged denominator is zero".into()));
    }
    Ok(PaParts { psi_g, psi_h, v_g, v_h })
}

/// `R^{PA} = V_n(Y,g,p) / (γ' V_n(Y,h,p))`.
pub fn pa_ratio<T: Real>(y: &ObservedPath<T>, cfg: &PaConfig) -> Result<f64> {
    let parts = pa_parts(y, cfg)?;
    Ok(parts.v_g / (cfg.gamma_prime * parts.v_h))
}

/// Pre-averaged ratio test with the block self-normalizer.
///
/// Each window contributes `ζ_i = Δ^{-1/4}(Ψ_i(g) - γ'γ''Ψ_i(h))/(γ'V_n(h))`,
/// and `Σ_i ζ_i = Δ^{-1/4}(R - γ'')`. The contributions are centered at
/// their overall mean, summed over the interior of each length-`r_n` block
/// (windows whose support stays inside the block), and the squared block
/// sums estimate the variance.
pub fn pa_test<T: Real>(y: &ObservedPath<T>, cfg: &PaConfig) -> Result<JumpTestReport> {
    let n = y.n();
    let blocks = n / cfg.r_n;
    if blocks < 2 {
        return Err(JumpError::InsufficientData { needed: 2 * cfg.r_n + 1, got: n + 1 });
    }
    let parts = pa_parts(y, cfg)?;
    let ratio = parts.v_g / (cfg.gamma_prime * parts.v_h);
    let quarter = y.delta().powf(-0.25);
    let denom = cfg.gamma_prime * parts.v_h;
    let scale_h = cfg.gamma_prime * cfg.gamma_second;
    let zeta: Vec<f64> = parts
        .psi_g
        .iter()
        .zip(&parts.psi_h)
        .map(|(g, h)| quarter * (g - scale_h * h) / denom)
        .collect();
    let center = tree_sum(&zeta) / zeta.len() as f64;
    let block_sums: Vec<f64> = (0..blocks)
        .map(|b| {
            let lo = b * cfg.r_n;
            let hi = (b + 1) * cfg.r_n - cfg.k_n; // exclusive
            let centered: Vec<f64> = zeta[lo..hi].iter().map(|z| z - center).collect();
            tree_sum(&centered)
        })
        .collect();
    // The interior sums cover J(r - k) of the windows entering the ratio;
    // scale up to the full count.
    let coverage = zeta.len() as f64 / (blocks * (cfg.r_n - cfg.k_n)) as f64;
    let varsigma_sq =
        coverage * tree_sum(&block_sums.iter().map(|g| g * g).collect::<Vec<_>>());
    if !(varsigma_sq > 0.0 && varsigma_sq.is_finite()) {
        return Err(JumpError::DegenerateVariance(format!("ς̂² = {varsigma_sq}")));
    }
    let sd = varsigma_sq.sqrt();
    let z = quarter * (ratio - cfg.gamma_second) / sd;
    Ok(JumpTestReport::new(Method::Pa, ratio, z, two_sided_normal_pvalue(z))
        .tune("p", cfg.p as f64)
        .tune("k_n", cfg.k_n as f64)
        .tune("r_n", cfg.r_n as f64)
        .tune("J_n", blocks as f64)
        .tune("theta", cfg.k_n as f64 * y.delta().sqrt())
        .tune("gamma_second", cfg.gamma_second)
        .tune("coverage", coverage)
        .tune("varsigma_hat", sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn observed(values: Vec<f64>) -> ObservedPath {
        ObservedPath::new(values.clone(), 1.0 / (values.len() - 1) as f64, 1.0).unwrap()
    }

    fn sine_pair(k: usize, r: usize, delta: f64) -> PaConfig {
        PaConfig::new(4, k, r, WeightKind::Sine, WeightKind::SinePower { a: 2.0 }, delta).unwrap()
    }

    #[test]
    fn gamma_second_for_sine_and_sine_squared() {
        let cfg = sine_pair(20, 100, 1e-4);
        // γ = (1/2)/(3/8), γ' = (3/8)/(35/128)
        let gamma = 0.5 / 0.375;
        let gamma_prime = 0.375 / (35.0 / 128.0);
        assert!((cfg.gamma - gamma).abs() < 1e-10);
        assert!((cfg.gamma_prime - gamma_prime).abs() < 1e-10);
        assert!((cfg.gamma_second - gamma * gamma / gamma_prime).abs() < 1e-10);
        assert!(cfg.gamma_second > 1.0);
    }

    #[test]
    fn config_errors() {
        let sine = WeightKind::Sine;
        let sq = WeightKind::SinePower { a: 2.0 };
        assert!(PaConfig::new(5, 10, 100, sine, sq, 1e-3).is_err());
        assert!(PaConfig::new(4, 10, 10, sine, sq, 1e-3).is_err());
        // Swapping the pair gives γ'' < 1.
        assert!(PaConfig::new(4, 10, 100, sq, sine, 1e-3).is_err());
    }

    #[test]
    fn constant_and_linear_paths() {
        let w = build_weights(WeightKind::Sine, 10).unwrap();
        let (bar, hat) = preaveraged_series(&observed(vec![2.0; 40]), &w).unwrap();
        assert_eq!(bar.len(), 30);
        assert!(bar.iter().chain(&hat).all(|&x| x == 0.0));

        let c = 0.25;
        let (bar, _) =
            preaveraged_series(&observed((0..40).map(|i| c * i as f64).collect()), &w).unwrap();
        let expected = c * w.phi[1..10].iter().sum::<f64>();
        assert!(bar.iter().all(|b| (b - expected).abs() < 1e-12));
    }

    #[test]
    fn short_path_is_insufficient() {
        let w = build_weights(WeightKind::Sine, 10).unwrap();
        assert!(matches!(
            preaveraged_series(&observed(vec![0.0, 1.0, 0.5, 0.2]), &w),
            Err(JumpError::InsufficientData { .. })
        ));
    }
}
