//! Heston paths with optional jumps and additive noise.
//!
//! Each day draws from three substreams of its seed (Brownian, jumps,
//! noise), so changing the jump or noise design leaves the diffusive path
//! untouched.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::marks::MarkLaw;
use crate::model::{validate_jumps, JumpRecord, LogPricePath, ObservedPath};
use crate::rng::{self, tag};

/// `dX = -½V dt + √V dW`, `dV = κ(β̄ - V)dt + γ√V dB`, `d⟨W,B⟩ = ρ dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub v0: f64,
    pub kappa: f64,
    pub beta_bar: f64,
    pub gamma: f64,
    pub rho: f64,
}

impl Default for HestonParams {
    fn default() -> Self {
        Self { v0: 0.16, kappa: 5.0, beta_bar: 0.16, gamma: 0.5, rho: -0.5 }
    }
}

impl HestonParams {
    /// Constant variance `v`.
    pub fn constant(v: f64) -> Self {
        Self { v0: v, kappa: 0.0, beta_bar: v, gamma: 0.0, rho: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.v0 > 0.0
            && self.beta_bar > 0.0
            && self.kappa >= 0.0
            && self.gamma >= 0.0
            && self.rho.abs() <= 1.0
            && [self.v0, self.kappa, self.beta_bar, self.gamma].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid Heston parameters {self:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSpec {
    #[default]
    None,
    /// `Poisson(θ√Δ)` marks per interval, each scaled by `√V_{t_{i-1}} √Δ`.
    Dense { theta: f64, mark: MarkLaw },
    /// Compound Poisson with rate `lambda` per unit time.
    Sparse { lambda: f64, mark: MarkLaw },
    /// Deterministic jumps.
    Fixed { jumps: Vec<JumpRecord> },
}

impl JumpSpec {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            JumpSpec::None => Ok(()),
            JumpSpec::Dense { theta, mark } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return invalid(format!("dense intensity must be positive, got {theta}"));
                }
                mark.validate()
            }
            JumpSpec::Sparse { lambda, mark } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return invalid(format!("sparse intensity must be positive, got {lambda}"));
                }
                mark.validate()
            }
            JumpSpec::Fixed { jumps } => validate_jumps(jumps, horizon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    #[default]
    None,
    Gaussian { q: f64 },
    /// `q√(3/4)·t₈`, variance `q²`.
    StudentT8 { q: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::Gaussian { q } | NoiseSpec::StudentT8 { q } if q >= 0.0 && q.is_finite() => {
                Ok(())
            }
            _ => invalid(format!("noise scale must be non-negative, got {self:?}")),
        }
    }

    /// Noise variance `ω²`.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Gaussian { q } | NoiseSpec::StudentT8 { q } => q * q,
        }
    }
}

/// One simulated sample: `n` steps over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(default)]
    pub heston: HestonParams,
    #[serde(default)]
    pub jumps: JumpSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub n: usize,
    pub horizon: f64,
}

impl SimulationSpec {
    /// `days` trading days of one-second returns.
    pub fn one_second(days: usize) -> Self {
        Self {
            heston: HestonParams::default(),
            jumps: JumpSpec::None,
            noise: NoiseSpec::None,
            n: 23_400 * days,
            horizon: days as f64,
        }
    }

    pub fn delta(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.horizon > 0.0) {
            return invalid(format!("need n >= 2 and positive horizon, got {} / {}", self.n, self.horizon));
        }
        self.heston.validate()?;
        self.jumps.validate(self.horizon)?;
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDay {
    pub latent: LogPricePath,
    pub observed: ObservedPath,
    pub variance_path: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
    pub seed: u64,
}

/// Euler scheme with full truncation; `X_0 = 0`.
pub fn simulate_heston(
    params: &HestonParams,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<(LogPricePath, Vec<f64>)> {
    params.validate()?;
    if n < 2 || !(delta > 0.0) {
        return invalid(format!("need n >= 2 and positive delta, got {n} / {delta}"));
    }
    let mut g = rng::stream(seed);
    let sd = delta.sqrt();
    let rho_c = (1.0 - params.rho * params.rho).max(0.0).sqrt();
    let mut x = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    x.push(0.0);
    v.push(params.v0);
    let (mut xi, mut vi) = (0.0f64, params.v0);
    for _ in 0..n {
        let zw: f64 = StandardNormal.sample(&mut g);
        let z2: f64 = StandardNormal.sample(&mut g);
        let zb = params.rho * zw + rho_c * z2;
        let vp = vi.max(0.0);
        let root = vp.sqrt();
        xi += -0.5 * vp * delta + root * sd * zw;
        vi += params.kappa * (params.beta_bar - vp) * delta + params.gamma * root * sd * zb;
        x.push(xi);
        v.push(vi);
    }
    Ok((LogPricePath::new(x, delta, n as f64 * delta)?, v))
}

/// Index `i` of the interval `(t_{i-1}, t_i]` containing `time`.
fn containing_interval(time: f64, delta: f64, n: usize) -> usize {
    ((time / delta).ceil() as usize).clamp(1, n)
}

/// Adds the jump component to `x`; `v` is the variance on the same grid.
pub fn attach_jumps(
    x: &LogPricePath,
    v: &[f64],
    spec: &JumpSpec,
    seed: u64,
) -> Result<(LogPricePath, Vec<JumpRecord>)> {
    let n = x.n();
    if v.len() != n + 1 {
        return invalid(format!("variance path has {} points, path has {}", v.len(), n + 1));
    }
    spec.validate(x.horizon())?;
    let delta = x.delta();
    let mut g = rng::stream(seed);
    let mut shift = vec![0.0; n + 1];
    let records = match spec {
        JumpSpec::None => return Ok((x.clone(), Vec::new())),
        JumpSpec::Dense { theta, mark } => {
            let poisson = Poisson::new(theta * delta.sqrt())
                .map_err(|e| crate::JumpError::InvalidArgument(e.to_string()))?;
            let mut out = Vec::new();
            for i in 1..=n {
                let count = poisson.sample(&mut g) as u64;
                if count == 0 {
                    continue;
                }
                let marks: f64 = (0..count).map(|_| mark.sample(&mut g)).sum();
                let size = v[i - 1].max(0.0).sqrt() * delta.sqrt() * marks;
                shift[i] = size;
                if size != 0.0 {
                    out.push(JumpRecord { time: i as f64 * delta, size });
                }
            }
            out
        }
        JumpSpec::Sparse { lambda, mark } => {
            let horizon = x.horizon();
            let count = Poisson::new(lambda * horizon)
                .map_err(|e| crate::JumpError::InvalidArgument(e.to_string()))?
                .sample(&mut g) as usize;
            let mut out: Vec<JumpRecord> = (0..count)
                .map(|_| {
                    let time = g.random_range(0.0..horizon);
                    JumpRecord { time, size: mark.sample(&mut g) }
                })
                .filter(|j| j.time > 0.0 && j.size != 0.0)
                .collect();
            out.sort_by(|a, b| a.time.total_cmp(&b.time));
            for j in &out {
                shift[containing_interval(j.time, delta, n)] += j.size;
            }
            out
        }
        JumpSpec::Fixed { jumps } => {
            for j in jumps {
                shift[containing_interval(j.time, delta, n)] += j.size;
            }
            jumps.clone()
        }
    };
    let mut acc = 0.0;
    let values = x
        .values()
        .iter()
        .zip(&shift)
        .map(|(&xv, &s)| {
            acc += s;
            xv + acc
        })
        .collect();
    Ok((x.with_values(values)?, records))
}

/// Adds i.i.d. noise pointwise.
pub fn attach_noise(x: &LogPricePath, spec: &NoiseSpec, seed: u64) -> Result<ObservedPath> {
    spec.validate()?;
    let mut g = rng::stream(seed);
    let values: Vec<f64> = match *spec {
        NoiseSpec::None => return Ok(ObservedPath::from(x.clone())),
        NoiseSpec::Gaussian { q } => x
            .values()
            .iter()
            .map(|&v| {
                let e: f64 = StandardNormal.sample(&mut g);
                v + q * e
            })
            .collect(),
        NoiseSpec::StudentT8 { q } => {
            let t = StudentT::new(8.0).expect("valid degrees of freedom");
            let scale = q * 0.75f64.sqrt();
            x.values().iter().map(|&v| v + scale * t.sample(&mut g)).collect()
        }
    };
    Ok(ObservedPath::from(x.with_values(values)?))
}

/// Full pipeline: Heston path, jumps, noise.
pub fn simulate_day(spec: &SimulationSpec, seed: u64) -> Result<SimulatedDay> {
    spec.validate()?;
    let (x, v) = simulate_heston(&spec.heston, spec.n, spec.delta(), rng::derive(seed, tag::BROWNIAN))?;
    let (latent, jumps) = attach_jumps(&x, &v, &spec.jumps, rng::derive(seed, tag::JUMPS))?;
    let observed = attach_noise(&latent, &spec.noise, rng::derive(seed, tag::NOISE))?;
    Ok(SimulatedDay { latent, observed, variance_path: v, jumps, seed })
}

impl SimulatedDay {
    /// CSV with columns `index,time,latent,observed,variance`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| crate::JumpError::Io(e.into());
        w.write_record(["index", "time", "latent", "observed", "variance"]).map_err(to_err)?;
        let delta = self.latent.delta();
        for (i, ((x, y), v)) in self
            .latent
            .values()
            .iter()
            .zip(self.observed.values())
            .zip(&self.variance_path)
            .enumerate()
        {
            w.write_record(&[
                i.to_string(),
                (i as f64 * delta).to_string(),
                x.to_string(),
                y.to_string(),
                v.to_string(),
            ])
            .map_err(to_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAY: f64 = 1.0 / 23_400.0;

    #[test]
    fn constant_variance_reduction() {
        let (x, v) = simulate_heston(&HestonParams::constant(0.16), 23_400, DAY, 3).unwrap();
        assert!(v.iter().all(|&vi| vi == 0.16));
        let inc = x.increments();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
        assert!((var / (0.16 * DAY) - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn leverage_correlation() {
        let p = HestonParams::default();
        let (x, v) = simulate_heston(&p, 1_000_000, 1e-5, 5).unwrap();
        let sd = 1e-5f64.sqrt();
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 1..v.len() {
            let vp = v[i - 1].max(0.0);
            if vp < 1e-6 {
                continue;
            }
            let dw = (x.values()[i] - x.values()[i - 1] + 0.5 * vp * 1e-5) / (vp.sqrt() * sd);
            let db = (v[i] - v[i - 1] - p.kappa * (p.beta_bar - vp) * 1e-5) / (p.gamma * vp.sqrt() * sd);
            sxy += dw * db;
            sxx += dw * dw;
            syy += db * db;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!((corr + 0.5).abs() < 0.05, "{corr}");
    }

    #[test]
    fn no_jump_no_noise_pipeline_is_heston() {
        let spec = SimulationSpec { n: 2_000, horizon: 1.0, ..SimulationSpec::one_second(1) };
        let day = simulate_day(&spec, 99).unwrap();
        let (x, v) =
            simulate_heston(&spec.heston, spec.n, spec.delta(), rng::derive(99, tag::BROWNIAN)).unwrap();
        assert_eq!(day.latent, x);
        assert_eq!(*day.observed, x);
        assert_eq!(day.variance_path, v);
        assert!(day.jumps.is_empty());
        assert_eq!(simulate_day(&spec, 99).unwrap(), day);
    }

    #[test]
    fn fixed_jump_is_a_level_shift() {
        let (x, v) = simulate_heston(&HestonParams::default(), 100, 0.01, 1).unwrap();
        let spec = JumpSpec::Fixed { jumps: vec![JumpRecord { time: 0.5, size: 0.5 }] };
        let (y, rec) = attach_jumps(&x, &v, &spec, 2).unwrap();
        assert_eq!(rec.len(), 1);
        for i in 0..=100 {
            let d = y.values()[i] - x.values()[i];
            // A jump exactly at t_50 belongs to (t_49, t_50].
            let expect = if i >= 50 { 0.5 } else { 0.0 };
            assert!((d - expect).abs() < 1e-15, "{i}: {d}");
        }
    }

    #[test]
    fn sparse_count_mean() {
        let (x, v) = simulate_heston(&HestonParams::constant(0.16), 100, 0.01, 1).unwrap();
        let spec = JumpSpec::Sparse { lambda: 2.5, mark: MarkLaw::centered_normal(0.05) };
        let total: usize = (0..10_000).map(|s| attach_jumps(&x, &v, &spec, s).unwrap().1.len()).sum();
        assert!((total as f64 / 10_000.0 / 2.5 - 1.0).abs() < 0.02);
    }

    #[test]
    fn dense_sizes_follow_variance() {
        let (x, v) = simulate_heston(&HestonParams::constant(0.16), 23_400, DAY, 1).unwrap();
        let spec = JumpSpec::Dense { theta: 300.0, mark: MarkLaw::PointMass { value: 1.0 } };
        let (_, rec) = attach_jumps(&x, &v, &spec, 4).unwrap();
        let unit = 0.4 * DAY.sqrt();
        let marks: f64 = rec.iter().map(|j| (j.size / unit).round()).sum();
        let expected = 300.0 * DAY.sqrt() * 23_400.0;
        assert!((marks / expected - 1.0).abs() < 0.02, "{marks} vs {expected}");
    }

    #[test]
    fn noise_variances() {
        let x = LogPricePath::over_horizon(vec![0.0; 1_000_001], 1.0).unwrap();
        for (spec, target) in [
            (NoiseSpec::Gaussian { q: 0.005 }, 2.5e-5),
            (NoiseSpec::StudentT8 { q: 0.01 }, 1e-4),
        ] {
            let y = attach_noise(&x, &spec, 8).unwrap();
            let var = y.values().iter().map(|e| e * e).sum::<f64>() / y.values().len() as f64;
            assert!((var / target - 1.0).abs() < 0.03, "{spec:?}: {var}");
        }
        assert_eq!(*attach_noise(&x, &NoiseSpec::None, 8).unwrap(), x);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let spec = SimulationSpec { n: 10, horizon: 1.0, ..SimulationSpec::one_second(1) };
        let day = simulate_day(&spec, 1).unwrap();
        let mut buf = Vec::new();
        day.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,time,latent,observed,variance\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
