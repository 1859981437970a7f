use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, JumpError, Result};
use crate::marks::MarkLaw;
use crate::model::{JumpRecord, JumpTestReport, LogPricePath, Method};
use crate::numerics::{gaussian_abs_moment, tree_sum, two_sided_normal_pvalue};
use crate::rng::{self, tag};
use crate::scalar::Real;

/// Tuning of the power-variation ratio test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AjConfig {
    pub p: f64,
    pub k: usize,
    pub kernel_mc_paths: usize,
    pub kernel_mc_seed: u64,
}

impl Default for AjConfig {
    fn default() -> Self {
        Self { p: 4.0, k: 2, kernel_mc_paths: 10_000_000, kernel_mc_seed: 20_240_901 }
    }
}

impl AjConfig {
    pub fn new(p: f64, k: usize) -> Result<Self> {
        let cfg = Self { p, k, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 3.0 && self.p.is_finite()) {
            return invalid(format!("power p must exceed 3, got {}", self.p));
        }
        if self.k < 2 {
            return invalid(format!("block size k must be at least 2, got {}", self.k));
        }
        Ok(())
    }

    /// Continuous-path limit of the ratio, `k^{p/2-1}`.
    pub fn null_limit(&self) -> f64 {
        (self.k as f64).powf(self.p / 2.0 - 1.0)
    }
}

/// Monte Carlo constants of the block kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    /// `Var U_{p,k}(E_1..E_k)` over i.i.d. standard normals.
    pub varsigma_sq: f64,
    /// Dense-alternative mean shift constant; only present when a mark law
    /// was supplied.
    pub d_pk: Option<f64>,
    pub mc_paths: usize,
    pub mc_seed: u64,
    /// Standard error of `varsigma_sq`.
    pub standard_error: f64,
    pub d_pk_standard_error: Option<f64>,
}

impl KernelMoments {
    /// Moments with a known variance constant and no Monte Carlo error.
    pub fn exact(varsigma_sq: f64) -> Self {
        Self {
            varsigma_sq,
            d_pk: None,
            mc_paths: 0,
            mc_seed: 0,
            standard_error: 0.0,
            d_pk_standard_error: None,
        }
    }
}

/// `B_n(p) = Σ |Δ_i X|^p`.
pub fn power_variation<T: Real>(path: &LogPricePath<T>, p: f64) -> T {
    abs_power_sum(&path.increments(), T::lit(p))
}

fn abs_power_sum<T: Real>(xs: &[T], p: T) -> T {
    xs.iter().map(|x| x.abs().powf(p)).sum()
}

fn block_sums<T: Real>(inc: &[T], k: usize) -> Vec<T> {
    inc.chunks_exact(k).map(|c| c.iter().copied().sum()).collect()
}

/// `B_n^{(k)}(p)`: power variation of non-overlapping `k`-sums of increments,
/// discarding a trailing partial block.
pub fn block_power_variation<T: Real>(path: &LogPricePath<T>, p: f64, k: usize) -> Result<T> {
    if k < 2 {
        return invalid(format!("block size k must be at least 2, got {k}"));
    }
    if path.n() < k {
        return Err(JumpError::InsufficientData { needed: k + 1, got: path.n() + 1 });
    }
    Ok(abs_power_sum(&block_sums(&path.increments(), k), T::lit(p)))
}

/// `U_{p,k}(x) = |Σx|^p - k^{p/2-1} Σ|x|^p`.
pub fn block_kernel_u<T: Real>(x: &[T], p: f64, k: usize) -> Result<T> {
    if x.len() != k {
        return invalid(format!("kernel expects {k} arguments, got {}", x.len()));
    }
    let pw = T::lit(p);
    let sum: T = x.iter().copied().sum();
    let scale = T::lit((k as f64).powf(p / 2.0 - 1.0));
    Ok(sum.abs().powf(pw) - scale * abs_power_sum(x, pw))
}

/// Population `τ_0²` from integrated powers `A_p`, `A_{2p}` of volatility.
pub fn tau0_sq(varsigma_sq: f64, p: f64, k: usize, a_p: f64, a_2p: f64) -> Result<f64> {
    let m_p = gaussian_abs_moment(p)?;
    Ok(varsigma_sq * a_2p / (k as f64 * m_p * m_p * a_p * a_p))
}

/// Power-variation ratio test under the continuous-path null.
pub fn aj_test<T: Real>(
    path: &LogPricePath<T>,
    cfg: &AjConfig,
    moments: &KernelMoments,
) -> Result<JumpTestReport> {
    cfg.validate()?;
    let inc = path.increments();
    if inc.len() < cfg.k {
        return Err(JumpError::InsufficientData { needed: cfg.k + 1, got: inc.len() + 1 });
    }
    // The ratio and τ̂ are scale-free; rescaling keeps |Δ|^{2p} away from
    // underflow on fine grids.
    let scale = inc.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return Err(JumpError::DegeneratePath("all increments are zero".into()));
    }
    let inc: Vec<T> = inc.iter().map(|&x| x / scale).collect();
    let p = T::lit(cfg.p);
    let fine = abs_power_sum(&inc, p);
    let coarse = abs_power_sum(&block_sums(&inc, cfg.k), p);
    if fine == T::zero() {
        return Err(JumpError::DegeneratePath("fine-scale power variation is zero".into()));
    }
    let ratio = (coarse / fine).as_f64();

    let delta = path.delta();
    let m_p = gaussian_abs_moment(cfg.p)?;
    let m_2p = gaussian_abs_moment(2.0 * cfg.p)?;
    // Â_{r,n} up to the common factor scale^r, which cancels in Â_{2p}/Â_p².
    let a_p = fine.as_f64() * delta.powf(1.0 - cfg.p / 2.0) / m_p;
    let a_2p = abs_power_sum(&inc, T::lit(2.0 * cfg.p)).as_f64() * delta.powf(1.0 - cfg.p) / m_2p;
    let tau_sq = moments.varsigma_sq / (cfg.k as f64 * m_p * m_p) * a_2p / (a_p * a_p);
    if !(tau_sq > 0.0 && tau_sq.is_finite()) {
        return Err(JumpError::DegenerateVariance(format!("τ̂² = {tau_sq}")));
    }
    let tau = tau_sq.sqrt();
    let z = (ratio - cfg.null_limit()) / (delta.sqrt() * tau);
    Ok(JumpTestReport::new(Method::Aj, ratio, z, two_sided_normal_pvalue(z))
        .tune("p", cfg.p)
        .tune("k", cfg.k as f64)
        .tune("m_n", (inc.len() / cfg.k) as f64)
        .tune("tau_hat", tau)
        .tune("varsigma_sq", moments.varsigma_sq))
}

/// `τ_F² = p²(k-1)/B_p² · Σ|κ_q|^{2p-2} σ²_{τ_q}` with `B_p = Σ|κ_q|^p`.
/// `spot_vols` are the volatilities `σ_{τ_q}` at the jump times.
pub fn tau_f_sq(sizes: &[f64], spot_vols: &[f64], p: f64, k: usize) -> Result<f64> {
    if sizes.is_empty() {
        return invalid("at least one jump is required");
    }
    if sizes.len() != spot_vols.len() {
        return invalid("one spot volatility per jump is required");
    }
    if spot_vols.iter().any(|s| !(*s > 0.0)) {
        return invalid("spot volatilities must be positive");
    }
    let b_p: f64 = sizes.iter().map(|k| k.abs().powf(p)).sum();
    let weighted: f64 =
        sizes.iter().zip(spot_vols).map(|(k, s)| k.abs().powf(2.0 * p - 2.0) * s * s).sum();
    Ok(p * p * (k as f64 - 1.0) / (b_p * b_p) * weighted)
}

/// Jump-centered oracle statistic `Δ_n^{-1/2}(R_n - 1)/τ_F`, standard normal
/// under fixed finite-activity jumps.
pub fn aj_oracle_fixed_stat<T: Real>(
    path: &LogPricePath<T>,
    jumps: &[JumpRecord],
    spot_vols: &[f64],
    cfg: &AjConfig,
) -> Result<f64> {
    cfg.validate()?;
    let sizes: Vec<f64> = jumps.iter().map(|j| j.size).collect();
    let tau_f = tau_f_sq(&sizes, spot_vols, cfg.p, cfg.k)?.sqrt();
    let fine = power_variation(path, cfg.p).as_f64();
    if fine == 0.0 {
        return Err(JumpError::DegeneratePath("fine-scale power variation is zero".into()));
    }
    let ratio = block_power_variation(path, cfg.p, cfg.k)?.as_f64() / fine;
    Ok((ratio - 1.0) / (path.delta().sqrt() * tau_f))
}

const KERNEL_CHUNK: usize = 1 << 16;
pub(crate) const MIN_KERNEL_PATHS: usize = 100_000;

#[derive(Clone, Copy, Default)]
struct PowerSums {
    n: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl PowerSums {
    fn push(&mut self, x: f64) {
        let x2 = x * x;
        self.n += 1.0;
        self.s1 += x;
        self.s2 += x2;
        self.s3 += x2 * x;
        self.s4 += x2 * x2;
    }

    fn merge(parts: &[PowerSums]) -> PowerSums {
        let pick = |f: fn(&PowerSums) -> f64| tree_sum(&parts.iter().map(f).collect::<Vec<_>>());
        PowerSums {
            n: pick(|p| p.n),
            s1: pick(|p| p.s1),
            s2: pick(|p| p.s2),
            s3: pick(|p| p.s3),
            s4: pick(|p| p.s4),
        }
    }

    fn mean(&self) -> f64 {
        self.s1 / self.n
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        (self.s2 / self.n - m * m) * self.n / (self.n - 1.0)
    }

    /// Standard error of the sample variance from the fourth central moment.
    fn variance_se(&self) -> f64 {
        let m = self.mean();
        let (e2, e3, e4) = (self.s2 / self.n, self.s3 / self.n, self.s4 / self.n);
        let mu2 = e2 - m * m;
        let mu4 = e4 - 4.0 * m * e3 + 6.0 * m * m * e2 - 3.0 * m.powi(4);
        ((mu4 - mu2 * mu2).max(0.0) / self.n).sqrt()
    }
}

/// Chunked Monte Carlo where chunk `c` always draws from substream `c`;
/// the merged sums do not depend on the rayon pool size.
fn chunked_mc<F>(total: usize, seed: u64, draw: F) -> PowerSums
where
    F: Fn(&mut rng::Stream) -> f64 + Sync,
{
    let chunks = total.div_ceil(KERNEL_CHUNK);
    let parts: Vec<PowerSums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::substream(seed, c as u64);
            let len = KERNEL_CHUNK.min(total - c * KERNEL_CHUNK);
            let mut acc = PowerSums::default();
            for _ in 0..len {
                acc.push(draw(&mut rng));
            }
            acc
        })
        .collect();
    PowerSums::merge(&parts)
}

type CacheKey = (u64, usize, usize, u64, String);

fn cache() -> &'static Mutex<HashMap<CacheKey, KernelMoments>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, KernelMoments>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Seeded Monte Carlo estimates of `ς²_{p,k}` and, when `mark` is given,
/// `d_{p,k}` under that mark law. Results are cached per
/// `(p, k, budget, seed, mark)`.
pub fn kernel_moments(cfg: &AjConfig, mark: Option<&MarkLaw>) -> Result<KernelMoments> {
    cfg.validate()?;
    if cfg.kernel_mc_paths < MIN_KERNEL_PATHS {
        return invalid(format!(
            "kernel Monte Carlo budget {} below minimum {MIN_KERNEL_PATHS}",
            cfg.kernel_mc_paths
        ));
    }
    if let Some(m) = mark {
        m.validate()?;
    }
    let key = (
        cfg.p.to_bits(),
        cfg.k,
        cfg.kernel_mc_paths,
        cfg.kernel_mc_seed,
        mark.map(MarkLaw::cache_key).unwrap_or_default(),
    );
    if let Some(hit) = cache().lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }

    let (p, k) = (cfg.p, cfg.k);
    let scale = (k as f64).powf(p / 2.0 - 1.0);
    let base = rng::derive(cfg.kernel_mc_seed, tag::KERNEL);
    let u = chunked_mc(cfg.kernel_mc_paths, rng::derive(base, 1), |rng| {
        let mut sum = 0.0;
        let mut abs_p = 0.0;
        for _ in 0..k {
            let e: f64 = StandardNormal.sample(rng);
            sum += e;
            abs_p += e.abs().powf(p);
        }
        sum.abs().powf(p) - scale * abs_p
    });

    let d = mark.map(|law| {
        chunked_mc(cfg.kernel_mc_paths, rng::derive(base, 2), |rng| {
            let y = law.sample(rng);
            let first: f64 = StandardNormal.sample(rng);
            let mut sum = first;
            for _ in 1..k {
                let e: f64 = StandardNormal.sample(rng);
                sum += e;
            }
            (y + sum).abs().powf(p) - sum.abs().powf(p)
                - scale * ((y + first).abs().powf(p) - first.abs().powf(p))
        })
    });

    let out = KernelMoments {
        varsigma_sq: u.variance(),
        d_pk: d.map(|s| s.mean()),
        mc_paths: cfg.kernel_mc_paths,
        mc_seed: cfg.kernel_mc_seed,
        standard_error: u.variance_se(),
        d_pk_standard_error: d.map(|s| (s.variance() / s.n).sqrt()),
    };
    if !(out.varsigma_sq > 0.0) {
        return Err(JumpError::NumericFailure("kernel variance estimate is not positive".into()));
    }
    cache().lock().expect("cache lock").insert(key, out.clone());
    Ok(out)
}
