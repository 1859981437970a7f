//! Noiseless test battery: the power-variation ratio (sum type), the locally
//! standardized maximum (max type), their Cauchy combination, and the
//! analytic power and shift functions for the dense small-jump alternative.

mod aj;
mod cauchy;
mod dense;
mod lm;

pub use aj::{
    aj_oracle_fixed_stat, aj_test, block_kernel_u, block_power_variation, kernel_moments,
    power_variation, tau0_sq, tau_f_sq, AjConfig, KernelMoments,
};
pub use cauchy::{cauchy_combine, cauchy_combine_equal, cauchy_critical, P_CLAMP};
pub use dense::{dense_power_curve, dense_shift_mu};
pub use lm::{
    gumbel_max_test, local_bipower, lm_statistic, lm_test, LmConfig, LmStatistic, LmWindow,
};
