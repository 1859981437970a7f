use serde::{Deserialize, Serialize};

use crate::calibrate::BootstrapConfig;
use crate::error::{invalid, Result};
use crate::marks::MarkLaw;
use crate::model::{JumpRecord, Method};
use crate::simulate::{HestonParams, JumpSpec, NoiseSpec, SimulationSpec};

use super::battery::{MethodSpec, Tuning};

/// One-second observations per trading day.
pub const BASE_N_PER_DAY: usize = 23_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Design {
    SizeNull,
    Dense,
    Sparse,
    /// One jump of size `alt` at a uniform time.
    FixedJump,
    NoisySize,
    NoisyDense,
    NoisySparse,
    NoisyFixedJump,
}

impl Design {
    pub fn is_noisy(self) -> bool {
        matches!(self, Design::NoisySize | Design::NoisyDense | Design::NoisySparse | Design::NoisyFixedJump)
    }

    pub fn is_size(self) -> bool {
        matches!(self, Design::SizeNull | Design::NoisySize)
    }

    pub fn label(self) -> &'static str {
        match self {
            Design::SizeNull => "SIZE_NULL",
            Design::Dense => "DENSE",
            Design::Sparse => "SPARSE",
            Design::FixedJump => "FIXED_JUMP",
            Design::NoisySize => "NOISY_SIZE",
            Design::NoisyDense => "NOISY_DENSE",
            Design::NoisySparse => "NOISY_SPARSE",
            Design::NoisyFixedJump => "NOISY_FIXED_JUMP",
        }
    }

    fn default_mark(self) -> MarkLaw {
        match self {
            Design::Dense | Design::NoisyDense => MarkLaw::centered_normal(1.0),
            _ => MarkLaw::centered_normal(0.05),
        }
    }
}

/// A Monte Carlo table: designs × grids × alternatives × methods × levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: Design,
    /// Sampling intervals in seconds; each must divide the base grid.
    pub grids: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub levels: Vec<f64>,
    /// `θ` (dense), `λ` (sparse) or jump size (fixed); ignored for size designs.
    #[serde(default)]
    pub alternatives: Vec<f64>,
    /// Horizon in trading days.
    #[serde(default = "one_day")]
    pub days: usize,
    #[serde(default)]
    pub heston: HestonParams,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub mark: Option<MarkLaw>,
    /// Time of the fixed jump in days; drawn uniformly on `(0, days)` per
    /// replication when absent.
    #[serde(default)]
    pub jump_time: Option<f64>,
    #[serde(default)]
    pub tuning: Tuning,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub base_seed: u64,
}

fn one_day() -> usize {
    1
}

impl ExperimentConfig {
    /// Noiseless size table with AJ-2, LM and CC-2.
    pub fn size_null(grid: usize, replications: usize) -> Self {
        Self {
            design: Design::SizeNull,
            grids: vec![grid],
            methods: vec![
                MethodSpec::with_k(Method::Aj, 2),
                MethodSpec::new(Method::Lm),
                MethodSpec::with_k(Method::Cc, 2),
            ],
            replications,
            levels: vec![0.05],
            alternatives: Vec::new(),
            days: 1,
            heston: HestonParams::default(),
            noise: NoiseSpec::None,
            mark: None,
            jump_time: None,
            tuning: Tuning::default(),
            bootstrap: BootstrapConfig::default(),
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return invalid("replications must be at least 1");
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return invalid("levels must be a non-empty subset of (0,1)");
        }
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        if self.grids.is_empty() || self.grids.iter().any(|&g| g == 0 || BASE_N_PER_DAY % g != 0) {
            return invalid("grids must be positive divisors of 23400 seconds");
        }
        if self.days == 0 {
            return invalid("days must be at least 1");
        }
        if !self.design.is_size() && self.alternatives.is_empty() {
            return invalid(format!("design {} needs alternative parameters", self.design.label()));
        }
        if let Some(t) = self.jump_time {
            if !(t > 0.0 && t < self.days as f64) {
                return invalid("jump_time must lie inside (0, days)");
            }
        }
        if self.design.is_noisy() && self.noise == NoiseSpec::None {
            return invalid("noisy designs need a noise setting");
        }
        self.heston.validate()?;
        self.noise.validate()?;
        self.bootstrap.validate(self.methods.iter().any(|m| matches!(m.method, Method::La | Method::Ccn)))
    }

    /// Alternative values to sweep; a single `None` for size designs.
    pub fn alternative_values(&self) -> Vec<Option<f64>> {
        if self.design.is_size() {
            vec![None]
        } else {
            self.alternatives.iter().copied().map(Some).collect()
        }
    }

    /// Simulation spec for one replication. `jump_time` places the fixed jump.
    pub(crate) fn simulation(&self, alt: Option<f64>, jump_time: f64) -> SimulationSpec {
        let mark = self.mark.unwrap_or(self.design.default_mark());
        let jumps = match (self.design, alt) {
            (Design::Dense | Design::NoisyDense, Some(theta)) => JumpSpec::Dense { theta, mark },
            (Design::Sparse | Design::NoisySparse, Some(lambda)) => JumpSpec::Sparse { lambda, mark },
            (Design::FixedJump | Design::NoisyFixedJump, Some(size)) => {
                JumpSpec::Fixed { jumps: vec![JumpRecord { time: jump_time, size }] }
            }
            _ => JumpSpec::None,
        };
        let noise = if self.design.is_noisy() { self.noise } else { NoiseSpec::None };
        SimulationSpec {
            heston: self.heston,
            jumps,
            noise,
            n: BASE_N_PER_DAY * self.days,
            horizon: self.days as f64,
        }
    }
}
