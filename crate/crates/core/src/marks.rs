use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::shifted_even_moment;

/// Law of a jump mark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkLaw {
    PointMass { value: f64 },
    Normal { mean: f64, variance: f64 },
    Uniform { low: f64, high: f64 },
}

impl MarkLaw {
    pub fn centered_normal(variance: f64) -> Self {
        MarkLaw::Normal { mean: 0.0, variance }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MarkLaw::PointMass { value } if value.is_finite() => Ok(()),
            MarkLaw::Normal { mean, variance } if mean.is_finite() && variance >= 0.0 => Ok(()),
            MarkLaw::Uniform { low, high } if low.is_finite() && high.is_finite() && low <= high => {
                Ok(())
            }
            _ => invalid(format!("malformed mark law {self:?}")),
        }
    }

    pub fn is_degenerate_zero(&self) -> bool {
        match *self {
            MarkLaw::PointMass { value } => value == 0.0,
            MarkLaw::Normal { mean, variance } => mean == 0.0 && variance == 0.0,
            MarkLaw::Uniform { low, high } => low == 0.0 && high == 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::PointMass { value } => value,
            MarkLaw::Normal { mean, variance } => {
                Normal::new(mean, variance.sqrt()).expect("validated").sample(rng)
            }
            MarkLaw::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..high)
                }
            }
        }
    }

    /// `E[Y^q]` for even `q`, in closed form.
    pub fn even_moment(&self, q: u32) -> f64 {
        debug_assert!(q % 2 == 0);
        match *self {
            MarkLaw::PointMass { value } => value.powi(q as i32),
            MarkLaw::Normal { mean, variance } => shifted_even_moment(q, variance, mean),
            MarkLaw::Uniform { low, high } => {
                if low == high {
                    low.powi(q as i32)
                } else {
                    let e = q as i32 + 1;
                    (high.powi(e) - low.powi(e)) / (e as f64 * (high - low))
                }
            }
        }
    }

    /// Stable textual key used for caching Monte Carlo functionals.
    pub(crate) fn cache_key(&self) -> String {
        format!("{self:?}")
    }
}
