use serde::{Deserialize, Serialize};

use crate::error::{invalid, JumpError, Result};
use crate::model::{JumpTestReport, Method, ObservedPath};
use crate::numerics::{gumbel_constants, gumbel_upper_tail, tree_sum};
use crate::scalar::Real;

/// Floor applied to two-scale spot-variance estimates.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Tuning of the local-average max test and its spot-variance plug-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaConfig {
    /// Local-average window `M_n`.
    pub m_n: usize,
    /// `M_n √Δ_n` target the window was derived from.
    pub lambda: f64,
    /// `K^{SV} = ⌊c_K Δ^{-2/3}⌋`.
    pub tsrsv_ck: f64,
    /// `H = ⌊c_h Δ^{-5/6}⌋`.
    pub tsrsv_ch: f64,
}

impl LaConfig {
    /// `M_n = ⌈λ/√Δ_n⌉`, `c_K = c_h = 1`.
    pub fn for_grid(delta: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && delta > 0.0) {
            return invalid("lambda and delta must be positive");
        }
        let m_n = (lambda / delta.sqrt()).ceil() as usize;
        Ok(Self { m_n: m_n.max(1), lambda, tsrsv_ck: 1.0, tsrsv_ch: 1.0 })
    }

    pub fn with_window(m_n: usize) -> Self {
        Self { m_n, lambda: f64::NAN, tsrsv_ck: 1.0, tsrsv_ch: 1.0 }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.m_n == 0 {
            return invalid("local-average window must be positive");
        }
        if 2 * self.m_n > n {
            return Err(JumpError::InsufficientData { needed: 2 * self.m_n + 1, got: n + 1 });
        }
        if !(self.tsrsv_ck > 0.0 && self.tsrsv_ch > 0.0) {
            return invalid("spot-variance tuning constants must be positive");
        }
        Ok(())
    }

    /// TSRSV window length `H_n` in observations.
    pub fn tsrsv_window(&self, delta: f64) -> usize {
        self.tsrsv_lengths(delta).1
    }

    fn tsrsv_lengths(&self, delta: f64) -> (usize, usize) {
        let k = (self.tsrsv_ck * delta.powf(-2.0 / 3.0)).floor() as usize;
        let h = (self.tsrsv_ch * delta.powf(-5.0 / 6.0)).floor() as usize;
        (k, h)
    }
}

/// Start indices `0, 2M, 4M, …, 2M(N-1)` with `N = ⌊(n-2M)/(2M)⌋ + 1`.
pub fn disjoint_grid(n: usize, m: usize) -> Vec<usize> {
    if m == 0 || 2 * m > n {
        return Vec::new();
    }
    let count = (n - 2 * m) / (2 * m) + 1;
    (0..count).map(|j| 2 * m * j).collect()
}

/// Weight `a_{M,u}` of `Δ_{j+u}X` in `M·L_{n,j}`, `1 ≤ u ≤ 2M-1`.
pub fn triangular_weight(m: u64, u: u64) -> u64 {
    u.min(2 * m - u)
}

/// `Σ_{u=1}^{2M-1} a²_{M,u}` summed term by term.
pub fn triangular_weight_sq_sum(m: u64) -> u64 {
    (1..2 * m).map(|u| triangular_weight(m, u).pow(2)).sum()
}

/// `ω̂² = (1/2n) Σ (Δ_i Y)²`.
pub fn noise_variance_hat<T: Real>(y: &ObservedPath<T>) -> f64 {
    let v = y.values();
    let sq: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).as_f64().powi(2)).collect();
    tree_sum(&sq) / (2.0 * y.n() as f64)
}

/// Two-scale spot variances on the disjoint local-average grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotVarianceSeries {
    pub grid_indices: Vec<usize>,
    pub sigma_sq: Vec<f64>,
    pub omega_sq_hat: f64,
    /// `(K^{SV}, H)` used for the estimate.
    pub tsrv_lag: usize,
    pub window: usize,
}

/// Cumulative two-scale realized variance `TSRV(t_r)` for `r = 0..=n`.
fn tsrv_curve(y: &[f64], k: usize) -> Vec<f64> {
    let n = y.len() - 1;
    let mut fast = vec![0.0; n + 1];
    for i in 1..=n {
        fast[i] = fast[i - 1] + (y[i] - y[i - 1]).powi(2);
    }
    let mut slow = vec![0.0; n + 1];
    for i in k..=n {
        slow[i] = slow[i - 1] + (y[i] - y[i - k]).powi(2);
    }
    let kf = k as f64;
    let mut out = vec![0.0; n + 1];
    for r in k..=n {
        let rf = r as f64;
        out[r] = slow[r] / kf - (rf - kf + 1.0) / (kf * rf) * fast[r];
    }
    // Below the slow lag the estimator is undefined; interpolate linearly
    // from TSRV(t_0) = 0.
    for r in 1..k.min(n + 1) {
        out[r] = out[k] * r as f64 / kf;
    }
    out
}

/// Spot variance `σ̂²_{n,j} = [TSRV(t_{j*}) - TSRV(t_{j*-H})]/(HΔ)` with
/// `j* = max(j, H)` for every `j` on the disjoint grid, floored at
/// [`SIGMA_FLOOR`].
pub fn tsrsv_spot<T: Real>(y: &ObservedPath<T>, cfg: &LaConfig) -> Result<SpotVarianceSeries> {
    let n = y.n();
    cfg.check(n)?;
    let delta = y.delta();
    let (k, h) = cfg.tsrsv_lengths(delta);
    if k < 2 || h <= k || n <= h {
        return Err(JumpError::InsufficientData { needed: h.max(k + 1).max(2) + 2, got: n + 1 });
    }
    let y0 = y.values()[0];
    let levels: Vec<f64> = y.values().iter().map(|&v| (v - y0).as_f64()).collect();
    let tsrv = tsrv_curve(&levels, k);
    let bandwidth = h as f64 * delta;
    let grid = disjoint_grid(n, cfg.m_n);
    let sigma_sq = grid
        .iter()
        .map(|&j| {
            let star = j.max(h);
            ((tsrv[star] - tsrv[star - h]) / bandwidth).max(SIGMA_FLOOR)
        })
        .collect();
    Ok(SpotVarianceSeries {
        grid_indices: grid,
        sigma_sq,
        omega_sq_hat: noise_variance_hat(y),
        tsrv_lag: k,
        window: h,
    })
}

/// `v̂² = 2ω̂² + σ̂²(⅔M²Δ + ⅓Δ)`.
pub fn variance_proxy(omega_sq: f64, sigma_sq: f64, m: usize, delta: f64) -> f64 {
    let m = m as f64;
    2.0 * omega_sq + sigma_sq * (2.0 / 3.0 * m * m * delta + delta / 3.0)
}

/// Maximum of the standardized local-average differences.
#[derive(Debug, Clone, PartialEq)]
pub struct LaStatistic {
    pub max_abs: f64,
    /// Grid start index `j` of the maximizing window.
    pub argmax: usize,
    pub grid_len: usize,
}

fn la_max<T: Real>(
    y: &ObservedPath<T>,
    cfg: &LaConfig,
    spot: &SpotVarianceSeries,
) -> Result<LaStatistic> {
    let n = y.n();
    cfg.check(n)?;
    let m = cfg.m_n;
    let grid = disjoint_grid(n, m);
    if spot.grid_indices != grid {
        return invalid("spot-variance series was computed on a different grid");
    }
    let y0 = y.values()[0];
    // prefix[i] = Σ_{u<i} (Y_u - Y_0)
    let mut prefix = Vec::with_capacity(n + 2);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in y.values() {
        acc += (v - y0).as_f64();
        prefix.push(acc);
    }
    let mean = |j: usize| (prefix[j + m] - prefix[j]) / m as f64;
    let root_m = (m as f64).sqrt();
    let mut best = (f64::NEG_INFINITY, 0);
    for (&j, &s2) in grid.iter().zip(&spot.sigma_sq) {
        let v2 = variance_proxy(spot.omega_sq_hat, s2, m, y.delta());
        if !(v2 > 0.0) {
            return Err(JumpError::DegenerateVariance(format!("v̂² = {v2} at grid index {j}")));
        }
        let x = (root_m * (mean(j + m) - mean(j)) / v2.sqrt()).abs();
        if x > best.0 {
            best = (x, j);
        }
    }
    Ok(LaStatistic { max_abs: best.0, argmax: best.1, grid_len: grid.len() })
}

/// Spot variances plus the raw maximum, re-estimating every nuisance
/// quantity from `y`.
pub fn la_statistic<T: Real>(
    y: &ObservedPath<T>,
    cfg: &LaConfig,
) -> Result<(LaStatistic, SpotVarianceSeries)> {
    let spot = tsrsv_spot(y, cfg)?;
    Ok((la_max(y, cfg, &spot)?, spot))
}

/// Local-average max test with the Gumbel-limit p-value.
pub fn la_test<T: Real>(
    y: &ObservedPath<T>,
    cfg: &LaConfig,
    spot: &SpotVarianceSeries,
) -> Result<JumpTestReport> {
    let grid_len = disjoint_grid(y.n(), cfg.m_n).len();
    if grid_len < 8 {
        return Err(JumpError::InsufficientData { needed: 16 * cfg.m_n + 1, got: y.n() + 1 });
    }
    let stat = la_max(y, cfg, spot)?;
    let (a_n, b_n) = gumbel_constants(stat.grid_len);
    let xi = (stat.max_abs - a_n) / b_n;
    let mut report = JumpTestReport::new(Method::La, stat.max_abs, xi, gumbel_upper_tail(xi))
        .tune("M_n", cfg.m_n as f64)
        .tune("N_n", stat.grid_len as f64)
        .tune("K_sv", spot.tsrv_lag as f64)
        .tune("H_n", spot.window as f64)
        .tune("omega_sq_hat", spot.omega_sq_hat);
    report.location = Some(stat.argmax);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn observed(values: Vec<f64>, horizon: f64) -> ObservedPath {
        let n = values.len() - 1;
        ObservedPath::new(values, horizon / n as f64, horizon).unwrap()
    }

    #[test]
    fn triangular_identity() {
        for m in 1..=50u64 {
            assert_eq!(3 * triangular_weight_sq_sum(m), 2 * m.pow(3) + m);
        }
    }

    #[test]
    fn local_average_difference_has_triangular_representation() {
        let vals: Vec<f64> = (0..=60).map(|i| ((i * 31 % 17) as f64 * 0.3).sin()).collect();
        let m = 5;
        let j = 12;
        let mean = |s: usize| vals[s..s + m].iter().sum::<f64>() / m as f64;
        let l = mean(j + m) - mean(j);
        let rep: f64 = (1..2 * m)
            .map(|u| triangular_weight(m as u64, u as u64) as f64 * (vals[j + u] - vals[j + u - 1]))
            .sum::<f64>()
            / m as f64;
        assert!((l - rep).abs() < 1e-12);
    }

    #[test]
    fn grid_is_disjoint() {
        let g = disjoint_grid(1_000, 30);
        assert_eq!(g.len(), (1_000 - 60) / 60 + 1);
        assert!(g.windows(2).all(|w| w[1] - w[0] == 60));
        assert!(*g.last().unwrap() + 60 <= 1_000);
        assert!(disjoint_grid(10, 6).is_empty());
    }

    #[test]
    fn proxy_value() {
        let delta = 1.0 / 23_400.0;
        let direct = 2.0 * 1e-4 + 0.16 * (2.0 / 3.0 * 1e4 * delta + delta / 3.0);
        let v = variance_proxy(1e-4, 0.16, 100, delta);
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.045_788).abs() < 5e-6);
    }

    #[test]
    fn constant_path_floors_spot_variance() {
        let y = observed(vec![4.6; 23_401], 1.0);
        let cfg = LaConfig::for_grid(y.delta(), 1.0).unwrap();
        let spot = tsrsv_spot(&y, &cfg).unwrap();
        assert_eq!(noise_variance_hat(&y), 0.0);
        assert!(spot.sigma_sq.iter().all(|&s| s == SIGMA_FLOOR));
    }

    #[test]
    fn too_short_for_tsrsv() {
        let y = observed(vec![0.0, 0.1, 0.0, 0.2, 0.1, 0.0, 0.3], 6.0);
        let cfg = LaConfig::with_window(1);
        assert!(matches!(tsrsv_spot(&y, &cfg), Err(JumpError::InsufficientData { .. })));
    }

    #[test]
    fn tsrv_curve_is_zero_at_origin() {
        let ys: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let c = tsrv_curve(&ys, 10);
        assert_eq!(c[0], 0.0);
        assert!((c[5] - c[10] / 2.0).abs() < 1e-15);
    }
}
