use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, JumpError, Result};
use crate::model::{JumpTestReport, LogPricePath, Method};
use crate::numerics::{gumbel_constants, gumbel_upper_tail};
use crate::scalar::Real;

/// Rule for the bipower window length `K_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LmWindow {
    Fixed { k: usize },
    /// `K_n = ⌈n^exponent⌉`.
    PowerOfN { exponent: f64 },
    /// `K_n = ⌊Δ_n^{-rho}⌋`, `rho ∈ (1/2, 1)`.
    DeltaRate { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub window: LmWindow,
    pub demean: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self { window: LmWindow::PowerOfN { exponent: 0.6 }, demean: true }
    }
}

impl LmConfig {
    /// Window length for a path with `n` increments and spacing `delta`.
    pub fn window_len(&self, n: usize, delta: f64) -> Result<usize> {
        let k = match self.window {
            LmWindow::Fixed { k } => k,
            LmWindow::PowerOfN { exponent } => {
                if !(exponent > 0.0 && exponent < 1.0) {
                    return invalid(format!("window exponent must lie in (0,1), got {exponent}"));
                }
                (n as f64).powf(exponent).ceil() as usize
            }
            LmWindow::DeltaRate { rho } => {
                if !(rho > 0.5 && rho < 1.0) {
                    return invalid(format!("window rate must lie in (1/2,1), got {rho}"));
                }
                delta.powf(-rho).floor() as usize
            }
        };
        if k < 2 {
            return invalid(format!("window K_n must be at least 2, got {k}"));
        }
        if n < 2 * k {
            return Err(JumpError::InsufficientData { needed: 2 * k + 1, got: n + 1 });
        }
        Ok(k)
    }
}

/// Local bipower variances `V̂_{n,i}` for `i = K..=n` (1-based increment
/// index); element `i - K` of the result. Each window holds the `K - 1`
/// adjacent products ending at increment `i`.
pub fn local_bipower<T: Real>(inc: &[T], k: usize) -> Vec<T> {
    let n = inc.len();
    // prefix[j] = Σ_{m=2}^{j} |d_m||d_{m-1}| (1-based).
    let mut prefix = vec![T::zero(); n + 1];
    for j in 2..=n {
        prefix[j] = prefix[j - 1] + inc[j - 1].abs() * inc[j - 2].abs();
    }
    let c = T::lit(FRAC_PI_2 / (k as f64 - 1.0));
    (k..=n).map(|i| c * (prefix[i] - prefix[i + 1 - k])).collect()
}

/// Raw maximum of the locally standardized increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmStatistic {
    pub max_abs: f64,
    /// 1-based increment index of the maximum.
    pub argmax: usize,
    pub window: usize,
}

/// `M_n = max_{K ≤ i ≤ n} |Δ_i X| / √V̂_{n,i}` computed from increments.
pub fn lm_statistic<T: Real>(inc: &[T], window: usize, demean: bool) -> Result<LmStatistic> {
    let owned;
    let inc = if demean {
        let mean = inc.iter().copied().sum::<T>() / T::lit(inc.len() as f64);
        owned = inc.iter().map(|&x| x - mean).collect::<Vec<_>>();
        &owned[..]
    } else {
        inc
    };
    let v = local_bipower(inc, window);
    let mut best = (f64::NEG_INFINITY, 0);
    for (off, &vi) in v.iter().enumerate() {
        if !(vi > T::zero()) {
            return Err(JumpError::DegenerateVariance(format!(
                "local bipower variance is zero at increment {}",
                window + off
            )));
        }
        let i = window + off;
        let l = (inc[i - 1].abs() / vi.sqrt()).as_f64();
        if l > best.0 {
            best = (l, i);
        }
    }
    Ok(LmStatistic { max_abs: best.0, argmax: best.1, window })
}

fn gumbel_report(method: Method, max_abs: f64, n: usize) -> JumpTestReport {
    let (c_n, a_n) = gumbel_constants(n);
    let xi = (max_abs - c_n) / a_n;
    JumpTestReport::new(method, max_abs, xi, gumbel_upper_tail(xi))
        .tune("c_n", c_n)
        .tune("a_n", a_n)
}

/// Locally standardized maximum test with the Gumbel-limit p-value.
pub fn lm_test<T: Real>(path: &LogPricePath<T>, cfg: &LmConfig) -> Result<JumpTestReport> {
    let n = path.n();
    let k = cfg.window_len(n, path.delta())?;
    let stat = lm_statistic(&path.increments(), k, cfg.demean)?;
    let mut report = gumbel_report(Method::Lm, stat.max_abs, n)
        .tune("K_n", k as f64)
        .tune("demean", if cfg.demean { 1.0 } else { 0.0 });
    report.location = Some(stat.argmax);
    Ok(report)
}

/// Max test on returns already divided by their true local scale: the
/// statistic is `max |z_i|` over all `n` entries, normalized with the same
/// Gumbel constants as [`lm_test`].
pub fn gumbel_max_test<T: Real>(standardized: &[T]) -> Result<JumpTestReport> {
    if standardized.len() < 2 {
        return Err(JumpError::InsufficientData { needed: 2, got: standardized.len() });
    }
    let (i, m) = standardized
        .iter()
        .map(|z| z.abs().as_f64())
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, z)| if z > b.1 { (i, z) } else { b });
    let mut report = gumbel_report(Method::Lm, m, standardized.len());
    report.location = Some(i + 1);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_path(n: usize, sd: f64, seed: u64) -> LogPricePath {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let mut v = vec![x];
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            x += sd * e;
            v.push(x);
        }
        LogPricePath::over_horizon(v, 1.0).unwrap()
    }

    #[test]
    fn bipower_window_matches_direct_sum() {
        let p = gaussian_path(200, 0.01, 1);
        let inc = p.increments();
        let k = 15;
        let v = local_bipower(&inc, k);
        for i in [k, k + 1, 100, 200] {
            let mut s = 0.0;
            for j in (i + 2 - k)..=i {
                s += inc[j - 1].abs() * inc[j - 2].abs();
            }
            let direct = FRAC_PI_2 / (k as f64 - 1.0) * s;
            assert!((v[i - k] - direct).abs() < 1e-15);
        }
        assert_eq!(v.len(), 200 - k + 1);
    }

    #[test]
    fn window_rules() {
        let cfg = LmConfig::default();
        assert_eq!(cfg.window_len(4_680, 1.0 / 4_680.0).unwrap(), 160);
        assert_eq!(cfg.window_len(23_400, 1.0 / 23_400.0).unwrap(), 419);
        let fixed = LmConfig { window: LmWindow::Fixed { k: 60 }, demean: false };
        assert!(matches!(fixed.window_len(100, 0.01), Err(JumpError::InsufficientData { .. })));
        let tiny = LmConfig { window: LmWindow::Fixed { k: 1 }, demean: false };
        assert!(tiny.window_len(100, 0.01).is_err());
        let rate = LmConfig { window: LmWindow::DeltaRate { rho: 0.6 }, demean: true };
        assert_eq!(rate.window_len(23_400, 1.0 / 23_400.0).unwrap(), 418);
    }

    #[test]
    fn affine_price_transform_leaves_statistic_unchanged() {
        let p = gaussian_path(2_000, 0.01, 5);
        let q = p.map_values(|x| 3.0 * x + 1.25).unwrap();
        let a = lm_test(&p, &LmConfig::default()).unwrap();
        let b = lm_test(&q, &LmConfig::default()).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-9);
        assert_eq!(a.location, b.location);
    }

    #[test]
    fn detects_and_locates_a_large_jump() {
        let p = gaussian_path(4_680, 0.4 / 4_680f64.sqrt(), 9);
        let mut v = p.values().to_vec();
        for x in v.iter_mut().skip(2_341) {
            *x += 0.5;
        }
        let jumped = p.with_values(v).unwrap();
        let r = lm_test(&jumped, &LmConfig::default()).unwrap();
        assert!(r.pvalue < 1e-10);
        assert_eq!(r.location, Some(2_341));
    }

    #[test]
    fn zero_local_variance_is_an_error() {
        let mut v = vec![0.0; 101];
        v[100] = 1.0;
        let p = LogPricePath::over_horizon(v, 1.0).unwrap();
        let cfg = LmConfig { window: LmWindow::Fixed { k: 10 }, demean: false };
        assert!(matches!(lm_test(&p, &cfg), Err(JumpError::DegenerateVariance(_))));
    }
}
