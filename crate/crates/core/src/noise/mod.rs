//! Noise-robust battery for observations `Y = X + ε` with i.i.d. additive
//! noise: a pre-averaged power-variation ratio with a block self-normalizer,
//! a local-average maximum standardized by a two-scale spot-variance
//! estimate, and their Cauchy combination.

mod dense;
mod local_avg;
mod preavg;
mod rho;
mod weights;

pub use dense::{noise_shift_identity_check, noisy_cauchy, noisy_dense_shift};
pub use local_avg::{
    disjoint_grid, la_statistic, la_test, noise_variance_hat, triangular_weight,
    triangular_weight_sq_sum, tsrsv_spot, variance_proxy, LaConfig, LaStatistic,
    SpotVarianceSeries, SIGMA_FLOOR,
};
pub use preavg::{pa_ratio, pa_test, preaveraged_series, PaConfig};
pub use rho::{rho_coefficients, rho_residuals};
pub use weights::{build_weights, PreAveragingWeights, WeightKind};
