//! Jump tests for high-frequency log-price paths.
//!
//! The crate pairs a sum-type statistic (the coarse/fine power-variation
//! ratio) with a max-type statistic (the locally standardized maximum
//! return) and merges their p-values through a Cauchy combination, which
//! keeps power against both many small jumps and a few large ones. A second
//! battery handles additive microstructure noise through pre-averaging and
//! local averages with a two-scale spot-variance plug-in.
//!
//! Path statistics are generic over the sample scalar ([`Real`]); the
//! aliases below fix `f64`, which is what the simulation and calibration
//! layers use.

pub mod calibrate;
pub mod error;
pub mod frictionless;
pub mod harness;
pub mod marks;
pub mod model;
pub mod noise;
pub mod numerics;
pub mod rng;
pub mod scalar;
pub mod simulate;

pub use error::{JumpError, Result};
pub use marks::MarkLaw;
pub use model::{JumpRecord, JumpTestReport, Method};
pub use scalar::{Field, Real};

/// Double-precision latent log-price path.
pub type Path = model::LogPricePath<f64>;
/// Double-precision noisy observation path.
pub type Observed = model::ObservedPath<f64>;
/// Single-precision latent path, for memory-bound batch work.
pub type PathF32 = model::LogPricePath<f32>;
/// Exact rational scalar for the ρ triangular system.
pub type Rational = num_rational::Ratio<i128>;
