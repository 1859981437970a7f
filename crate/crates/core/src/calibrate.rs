//! Parametric bootstrap calibration of the max-type tests.
//!
//! Both bootstraps fit a continuous Gaussian surrogate to the observed path,
//! redraw the path with fresh innovations and recompute the statistic. Every
//! resample `b` draws from `derive(seed, b)`; stage-2 resamples draw from
//! `derive(stage-1 seed, c)`, so raising `b2` never changes stage 1.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, JumpError, Result};
use crate::frictionless::{local_bipower, lm_statistic, LmConfig};
use crate::model::{LogPricePath, ObservedPath};
use crate::noise::{disjoint_grid, la_statistic, LaConfig};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub b1: usize,
    pub b2: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { b1: 199, b2: 99, alpha: 0.05, seed: 0 }
    }
}

impl BootstrapConfig {
    pub fn validate(&self, double: bool) -> Result<()> {
        if self.b1 < 19 {
            return invalid(format!("b1 must be at least 19, got {}", self.b1));
        }
        if double && self.b2 < 19 {
            return invalid(format!("b2 must be at least 19, got {}", self.b2));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        Ok(())
    }

    fn resample_seed(&self, b: usize) -> u64 {
        rng::derive(rng::derive(self.seed, tag::BOOTSTRAP), b as u64)
    }
}

/// `(1 + #{t* ≥ t})/(B + 1)`.
pub fn add_one_pvalue(t_obs: f64, resampled: &[f64]) -> f64 {
    let hits = resampled.iter().filter(|&&t| t >= t_obs).count();
    (1 + hits) as f64 / (resampled.len() + 1) as f64
}

/// Inverse-ECDF `alpha`-quantile: the `⌈αB⌉`-th smallest value.
pub fn empirical_quantile(values: &[f64], alpha: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((alpha * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Gaussian no-jump surrogate with per-increment variances from the local
/// bipower series; increments before the first full window reuse the first
/// estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BipowerSurrogate {
    pub increment_sd: Vec<f64>,
    pub delta: f64,
    pub window: usize,
}

impl BipowerSurrogate {
    pub fn fit(path: &LogPricePath, cfg: &LmConfig) -> Result<Self> {
        let n = path.n();
        let k = cfg.window_len(n, path.delta())?;
        let mut inc = path.increments();
        if cfg.demean {
            let mean = inc.iter().sum::<f64>() / n as f64;
            inc.iter_mut().for_each(|d| *d -= mean);
        }
        let v = local_bipower(&inc, k);
        if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
            return Err(JumpError::DegenerateVariance(format!(
                "fitted variance is zero at increment {}",
                i + k
            )));
        }
        let increment_sd = (1..=n).map(|i| v[i.max(k) - k].sqrt()).collect();
        Ok(Self { increment_sd, delta: path.delta(), window: k })
    }

    pub fn draw_increments(&self, seed: u64) -> Vec<f64> {
        let mut g = rng::stream(seed);
        self.increment_sd
            .iter()
            .map(|&s| {
                let z: f64 = StandardNormal.sample(&mut g);
                s * z
            })
            .collect()
    }
}

/// Bootstrap p-value of the locally standardized maximum.
pub fn lm_bootstrap_pvalue(path: &LogPricePath, cfg_lm: &LmConfig, cfg_bs: &BootstrapConfig) -> Result<f64> {
    cfg_bs.validate(false)?;
    let surrogate = BipowerSurrogate::fit(path, cfg_lm)?;
    let k = surrogate.window;
    let t_obs = lm_statistic(&path.increments(), k, cfg_lm.demean)?.max_abs;
    let resampled = (0..cfg_bs.b1)
        .into_par_iter()
        .map(|b| {
            let inc = surrogate.draw_increments(cfg_bs.resample_seed(b));
            lm_statistic(&inc, k, cfg_lm.demean).map(|s| s.max_abs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(add_one_pvalue(t_obs, &resampled))
}

/// Gaussian surrogate `Y* = X* + ω̂ε` where `X*` has spot variance held
/// constant on each disjoint local-average window.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySurrogate {
    pub omega: f64,
    /// Per-increment standard deviation `√(σ̂²Δ)`.
    pub increment_sd: Vec<f64>,
    pub delta: f64,
    pub horizon: f64,
}

impl NoisySurrogate {
    pub fn fit(y: &ObservedPath, cfg: &LaConfig) -> Result<(Self, f64)> {
        let (stat, spot) = la_statistic(y, cfg)?;
        Ok((Self::from_spot(y, cfg, &spot.sigma_sq, spot.omega_sq_hat), stat.max_abs))
    }

    fn from_spot(y: &ObservedPath, cfg: &LaConfig, sigma_sq: &[f64], omega_sq: f64) -> Self {
        let n = y.n();
        let span = 2 * cfg.m_n;
        let grid = disjoint_grid(n, cfg.m_n);
        let delta = y.delta();
        let sigma_sq = smooth_spot(sigma_sq, cfg.tsrsv_window(delta), span);
        let increment_sd = (0..n)
            .map(|i| {
                let seg = (i / span).min(grid.len() - 1);
                (sigma_sq[seg] * delta).sqrt()
            })
            .collect();
        // ω̂² carries the diffusive bias IV/(2n); strip it so the surrogate's
        // noise level does not grow from one resampling generation to the next.
        let mean_sigma_sq = sigma_sq.iter().sum::<f64>() / sigma_sq.len() as f64;
        let omega_sq = (omega_sq - 0.5 * mean_sigma_sq * delta).max(0.0);
        Self { omega: omega_sq.sqrt(), increment_sd, delta, horizon: y.horizon() }
    }

    pub fn draw(&self, seed: u64) -> Result<ObservedPath> {
        let mut g = rng::stream(seed);
        let mut values = Vec::with_capacity(self.increment_sd.len() + 1);
        let mut x = 0.0;
        let e: f64 = StandardNormal.sample(&mut g);
        values.push(self.omega * e);
        for &s in &self.increment_sd {
            let z: f64 = StandardNormal.sample(&mut g);
            let e: f64 = StandardNormal.sample(&mut g);
            x += s * z;
            values.push(x + self.omega * e);
        }
        ObservedPath::new(values, self.delta, self.horizon)
    }
}

/// Surrogate spot variance per local-average window. Each TSRSV value is a
/// trailing mean over `h` observations and jitters from block to block, so
/// a piecewise-constant path built from it is far rougher than the latent
/// variance and the resampled maxima come out heavy. Re-centre the trailing
/// windows on each block and average over one window length.
fn smooth_spot(sigma_sq: &[f64], h: usize, span: usize) -> Vec<f64> {
    let len = sigma_sq.len();
    let shift = (h / 2 + span / 2) / span;
    let w = h / span / 2;
    (0..len)
        .map(|j| {
            let c = (j + shift).min(len - 1);
            let (a, b) = (c.saturating_sub(w), (c + w + 1).min(len));
            sigma_sq[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Single-stage bootstrap p-value of the local-average maximum.
pub fn la_bootstrap_pvalue(y: &ObservedPath, cfg_la: &LaConfig, b1: usize, seed: u64) -> Result<f64> {
    let cfg = BootstrapConfig { b1, b2: 19, alpha: 0.05, seed };
    cfg.validate(false)?;
    let (surrogate, t_obs) = NoisySurrogate::fit(y, cfg_la)?;
    let resampled = (0..b1)
        .into_par_iter()
        .map(|b| {
            let path = surrogate.draw(cfg.resample_seed(b))?;
            la_statistic(&path, cfg_la).map(|(s, _)| s.max_abs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(add_one_pvalue(t_obs, &resampled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleBootstrapDecision {
    pub reject: bool,
    /// Stage-1 p-value `p̂*`.
    pub p_star: f64,
    /// Empirical `α`-quantile of the stage-2 p-values.
    pub threshold: f64,
    /// Share of stage-2 p-values at or below `p̂*`; the calibrated p-value.
    pub adjusted_pvalue: f64,
    pub statistic: f64,
    pub stage2_pvalues: Vec<f64>,
}

/// Decision rule given `p̂*` and the stage-2 p-values.
pub fn double_bootstrap_rule(p_star: f64, p_second: &[f64], alpha: f64) -> (bool, f64, f64) {
    let threshold = empirical_quantile(p_second, alpha);
    let adjusted = p_second.iter().filter(|&&p| p <= p_star).count() as f64 / p_second.len() as f64;
    (p_star < threshold, threshold, adjusted)
}

/// Two-stage bootstrap calibration of the noisy local-average test.
pub fn double_bootstrap_decision(
    y: &ObservedPath,
    cfg_la: &LaConfig,
    cfg_bs: &BootstrapConfig,
) -> Result<DoubleBootstrapDecision> {
    cfg_bs.validate(true)?;
    let (surrogate, t_obs) = NoisySurrogate::fit(y, cfg_la)?;
    let outer = (0..cfg_bs.b1)
        .into_par_iter()
        .map(|b| -> Result<(f64, f64)> {
            let seed_b = cfg_bs.resample_seed(b);
            let path = surrogate.draw(seed_b)?;
            let (stat, spot) = la_statistic(&path, cfg_la)?;
            let inner_fit = NoisySurrogate::from_spot(&path, cfg_la, &spot.sigma_sq, spot.omega_sq_hat);
            let inner = (0..cfg_bs.b2)
                .map(|c| {
                    let p = inner_fit.draw(rng::derive(seed_b, c as u64))?;
                    la_statistic(&p, cfg_la).map(|(s, _)| s.max_abs)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((stat.max_abs, add_one_pvalue(stat.max_abs, &inner)))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_star: Vec<f64> = outer.iter().map(|o| o.0).collect();
    let p_second: Vec<f64> = outer.iter().map(|o| o.1).collect();
    let p_star = add_one_pvalue(t_obs, &t_star);
    let (reject, threshold, adjusted_pvalue) = double_bootstrap_rule(p_star, &p_second, cfg_bs.alpha);
    Ok(DoubleBootstrapDecision {
        reject,
        p_star,
        threshold,
        adjusted_pvalue,
        statistic: t_obs,
        stage2_pvalues: p_second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_heston, HestonParams};

    #[test]
    fn add_one_extremes() {
        let r: Vec<f64> = (0..199).map(|i| i as f64).collect();
        assert_eq!(add_one_pvalue(-1.0, &r), 1.0);
        assert_eq!(add_one_pvalue(1e9, &r), 1.0 / 200.0);
    }

    #[test]
    fn quantile_is_inverse_ecdf() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(empirical_quantile(&v, 0.05), 0.05);
        assert_eq!(empirical_quantile(&v, 0.051), 0.06);
        assert_eq!(empirical_quantile(&[0.5, 1.0], 0.05), 0.5);
    }

    #[test]
    fn single_inner_draw_is_well_defined() {
        // With one inner draw the add-one p-values are 1/2 or 1.
        let p2 = [1.0, 0.5, 1.0, 1.0];
        let (reject, threshold, adj) = double_bootstrap_rule(0.2, &p2, 0.05);
        assert_eq!(threshold, 0.5);
        assert!(reject);
        assert_eq!(adj, 0.0);
    }

    #[test]
    fn config_bounds() {
        assert!(BootstrapConfig { b1: 18, ..Default::default() }.validate(false).is_err());
        assert!(BootstrapConfig { b2: 5, ..Default::default() }.validate(true).is_err());
        assert!(BootstrapConfig { b2: 5, ..Default::default() }.validate(false).is_ok());
    }

    #[test]
    fn lm_bootstrap_is_deterministic_and_in_range() {
        let (x, _) = simulate_heston(&HestonParams::default(), 2_000, 1.0 / 2_000.0, 4).unwrap();
        let cfg = BootstrapConfig { b1: 49, seed: 3, ..Default::default() };
        let p = lm_bootstrap_pvalue(&x, &LmConfig::default(), &cfg).unwrap();
        assert_eq!(p, lm_bootstrap_pvalue(&x, &LmConfig::default(), &cfg).unwrap());
        assert!((1.0 / 50.0..=1.0).contains(&p));
    }

    #[test]
    fn lm_bootstrap_flags_a_big_jump() {
        let (x, _) = simulate_heston(&HestonParams::default(), 2_000, 1.0 / 2_000.0, 4).unwrap();
        let mut v = x.values().to_vec();
        v[1_000..].iter_mut().for_each(|y| *y += 0.2);
        let y = x.with_values(v).unwrap();
        let cfg = BootstrapConfig { b1: 49, seed: 3, ..Default::default() };
        assert_eq!(lm_bootstrap_pvalue(&y, &LmConfig::default(), &cfg).unwrap(), 1.0 / 50.0);
    }

    #[test]
    fn surrogate_draws_are_reproducible() {
        let (x, _) = simulate_heston(&HestonParams::default(), 5 * 4_680, 1.0 / 4_680.0, 9).unwrap();
        let y = crate::simulate::attach_noise(&x, &crate::simulate::NoiseSpec::Gaussian { q: 0.005 }, 1).unwrap();
        let cfg = LaConfig::for_grid(y.delta(), 1.0).unwrap();
        let (s, _) = NoisySurrogate::fit(&y, &cfg).unwrap();
        assert_eq!(s.draw(5).unwrap(), s.draw(5).unwrap());
        assert_eq!(s.increment_sd.len(), y.n());
        // The diffusive part of ω̂² is stripped, leaving the noise level.
        assert!((s.omega / 0.005 - 1.0).abs() < 0.1, "{}", s.omega);
    }
}
