use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::marks::MarkLaw;
use crate::numerics::{gaussian_abs_moment, integrate, normal_pdf, two_sided_normal_pvalue};

use super::aj::{kernel_moments, AjConfig};
use super::cauchy::cauchy_critical;

/// Mean shift `θ d_{p,k} / (m_p τ_0)` of the normalized ratio under dense
/// small jumps with intensity parameter `theta` and marks from `mark`.
pub fn dense_shift_mu(cfg: &AjConfig, theta: f64, mark: &MarkLaw, tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) {
        return invalid(format!("tau0 must be positive, got {tau0}"));
    }
    if !(theta >= 0.0) {
        return invalid(format!("theta must be non-negative, got {theta}"));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let d = kernel_moments(cfg, Some(mark))?.d_pk.expect("mark supplied");
    Ok(theta * d / (gaussian_abs_moment(cfg.p)? * tau0))
}

/// Asymptotic level-`alpha` power of the equal-weight Cauchy combination
/// when the sum component is `N(mu, 1)` and the max component is null.
pub fn dense_power_curve(alpha: f64, mu: f64) -> Result<f64> {
    let c = cauchy_critical(alpha)?;
    if !mu.is_finite() {
        return invalid("mean shift must be finite");
    }
    let integrand = |z: f64| {
        let a = (PI * (0.5 - two_sided_normal_pvalue(z))).tan();
        (0.5 - (2.0 * c - a).atan() / PI) * normal_pdf(z - mu)
    };
    let (lo, hi) = (mu - 10.0, mu + 10.0);
    // |z| has a kink at the origin.
    let value = if lo < 0.0 && hi > 0.0 {
        integrate(integrand, lo, 0.0, 5e-7)? + integrate(integrand, 0.0, hi, 5e-7)?
    } else {
        integrate(integrand, lo, hi, 1e-6)?
    };
    Ok(value.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Cauchy, Distribution, Normal};

    #[test]
    fn null_power_equals_level() {
        for alpha in [0.01, 0.05, 0.1] {
            let b = dense_power_curve(alpha, 0.0).unwrap();
            assert!((b - alpha).abs() < 1e-6, "{alpha}: {b}");
        }
    }

    #[test]
    fn power_increases_with_shift() {
        let b1 = dense_power_curve(0.05, 1.0).unwrap();
        let b2 = dense_power_curve(0.05, 2.0).unwrap();
        assert!(b2 > b1);
        assert!((dense_power_curve(0.05, -2.0).unwrap() - b2).abs() < 1e-6);
    }

    #[test]
    fn power_matches_monte_carlo_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cauchy = Cauchy::new(0.0, 1.0).unwrap();
        let c = cauchy_critical(0.05).unwrap();
        let draws = 400_000;
        for mu in [2.0, 8.0] {
            let z = Normal::new(mu, 1.0).unwrap();
            let hits = (0..draws)
                .filter(|_| {
                    let a = (PI * (0.5 - two_sided_normal_pvalue(z.sample(&mut rng)))).tan();
                    0.5 * a + 0.5 * cauchy.sample(&mut rng) > c
                })
                .count();
            let mc = hits as f64 / draws as f64;
            let se = (mc * (1.0 - mc) / draws as f64).sqrt().max(1e-4);
            let b = dense_power_curve(0.05, mu).unwrap();
            assert!((b - mc).abs() < 4.0 * se, "mu={mu}: quad {b} vs mc {mc}");
        }
        assert!(dense_power_curve(0.05, 8.0).unwrap() > 0.99);
    }

    #[test]
    fn shift_cases() {
        let cfg = AjConfig { kernel_mc_paths: 200_000, ..AjConfig::default() };
        let normal = MarkLaw::centered_normal(1.0);
        assert_eq!(dense_shift_mu(&cfg, 0.0, &normal, 1.0).unwrap(), 0.0);
        assert_eq!(dense_shift_mu(&cfg, 3.0, &MarkLaw::PointMass { value: 0.0 }, 1.0).unwrap(), 0.0);
        let one = dense_shift_mu(&cfg, 1.5, &normal, 2.0).unwrap();
        let two = dense_shift_mu(&cfg, 3.0, &normal, 2.0).unwrap();
        assert_eq!(two, 2.0 * one);
        assert!(dense_shift_mu(&cfg, 1.0, &normal, 0.0).is_err());
    }
}
