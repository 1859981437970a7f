//! Sampled paths, jump records and test reports.

use std::collections::BTreeMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, JumpError, Result};
use crate::scalar::Real;

const GRID_REL_TOL: f64 = 1e-9;

/// Log-prices on the regular grid `t_i = i·delta`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPricePath<T: Real = f64> {
    values: Vec<T>,
    delta: f64,
    horizon: f64,
    dropped: usize,
}

impl<T: Real> LogPricePath<T> {
    pub fn new(values: Vec<T>, delta: f64, horizon: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(JumpError::InsufficientData { needed: 3, got: values.len() });
        }
        if !(delta > 0.0 && delta.is_finite()) || !(horizon > 0.0 && horizon.is_finite()) {
            return invalid(format!("delta ({delta}) and horizon ({horizon}) must be positive"));
        }
        let n = (values.len() - 1) as f64;
        if ((n * delta - horizon) / horizon).abs() > GRID_REL_TOL {
            return invalid(format!(
                "grid mismatch: n·delta = {} but horizon = {horizon}",
                n * delta
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite log-price at index {i}"));
        }
        Ok(Self { values, delta, horizon, dropped: 0 })
    }

    /// Path over `[0, horizon]` with spacing `horizon / n`.
    pub fn over_horizon(values: Vec<T>, horizon: f64) -> Result<Self> {
        let n = values.len().saturating_sub(1).max(1);
        Self::new(values, horizon / n as f64, horizon)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Number of increments `n`.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Observations discarded by the last aggregation because they did not
    /// fill a whole coarse interval.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn increments(&self) -> Vec<T> {
        increments(&self.values)
    }

    /// Keeps every `factor`-th observation starting at index 0. Trailing
    /// observations that do not complete a coarse interval are dropped and
    /// counted in [`dropped`](Self::dropped).
    pub fn aggregate_last_tick(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return invalid("aggregation factor must be positive");
        }
        let n_coarse = self.n() / factor;
        if n_coarse < 2 {
            return Err(JumpError::InsufficientData { needed: 2 * factor + 1, got: self.values.len() });
        }
        let values: Vec<T> = self.values.iter().step_by(factor).take(n_coarse + 1).copied().collect();
        let delta = self.delta * factor as f64;
        Ok(Self {
            values,
            delta,
            horizon: delta * n_coarse as f64,
            dropped: self.dropped * factor + (self.n() - n_coarse * factor),
        })
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.values.len() {
            return invalid("replacement values must keep the grid length");
        }
        let mut out = Self::new(values, self.delta, self.horizon)?;
        out.dropped = self.dropped;
        Ok(out)
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }
}

/// First differences `x[i] - x[i-1]`.
pub fn increments<T: Real>(values: &[T]) -> Vec<T> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Noisy observations `Y = X + ε` on the same grid contract as
/// [`LogPricePath`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPath<T: Real = f64>(LogPricePath<T>);

impl<T: Real> ObservedPath<T> {
    pub fn new(values: Vec<T>, delta: f64, horizon: f64) -> Result<Self> {
        LogPricePath::new(values, delta, horizon).map(Self)
    }

    pub fn into_inner(self) -> LogPricePath<T> {
        self.0
    }

    pub fn aggregate_last_tick(&self, factor: usize) -> Result<Self> {
        self.0.aggregate_last_tick(factor).map(Self)
    }
}

impl<T: Real> From<LogPricePath<T>> for ObservedPath<T> {
    fn from(p: LogPricePath<T>) -> Self {
        Self(p)
    }
}

impl<T: Real> Deref for ObservedPath<T> {
    type Target = LogPricePath<T>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// A discontinuity of size `size` at time `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub size: f64,
}

/// Checks strict time ordering and that every jump lies inside `(0, horizon)`.
pub fn validate_jumps(jumps: &[JumpRecord], horizon: f64) -> Result<()> {
    for (i, j) in jumps.iter().enumerate() {
        if !(j.time > 0.0 && j.time < horizon) {
            return invalid(format!("jump {i} at {} outside (0, {horizon})", j.time));
        }
        if j.size == 0.0 || !j.size.is_finite() {
            return invalid(format!("jump {i} has zero or non-finite size"));
        }
    }
    if jumps.windows(2).any(|w| w[1].time <= w[0].time) {
        return invalid("jump times must be strictly increasing");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    /// Power-variation ratio (sum type).
    Aj,
    /// Locally standardized maximum (max type).
    Lm,
    /// Cauchy combination of AJ and LM.
    Cc,
    /// Pre-averaged power-variation ratio.
    Pa,
    /// Local-average maximum.
    La,
    /// Cauchy combination of PA and LA.
    Ccn,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Aj => "AJ",
            Method::Lm => "LM",
            Method::Cc => "CC",
            Method::Pa => "PA",
            Method::La => "LA",
            Method::Ccn => "CCN",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = JumpError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AJ" => Ok(Method::Aj),
            "LM" => Ok(Method::Lm),
            "CC" => Ok(Method::Cc),
            "PA" | "AJJ" => Ok(Method::Pa),
            "LA" => Ok(Method::La),
            "CCN" => Ok(Method::Ccn),
            other => invalid(format!("unknown method {other:?}")),
        }
    }
}

/// Outcome of one test on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpTestReport {
    pub method: Method,
    pub statistic: f64,
    pub normalized: f64,
    pub pvalue: f64,
    /// Index of the increment (LM) or grid point (LA) attaining the maximum.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub location: Option<usize>,
    pub tuning: BTreeMap<String, f64>,
}

impl JumpTestReport {
    pub(crate) fn new(method: Method, statistic: f64, normalized: f64, pvalue: f64) -> Self {
        Self { method, statistic, normalized, pvalue, location: None, tuning: BTreeMap::new() }
    }

    pub(crate) fn tune(mut self, key: &str, value: f64) -> Self {
        self.tuning.insert(key.to_owned(), value);
        self
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.pvalue <= level
    }
}
