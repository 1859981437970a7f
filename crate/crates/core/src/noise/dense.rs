use crate::error::{invalid, Result};
use crate::frictionless::cauchy_combine_equal;
use crate::marks::MarkLaw;
use crate::numerics::{binomial, double_factorial_odd, gaussian_abs_moment, shifted_even_moment};

use super::preavg::PaConfig;
use super::rho::rho_coefficients;
use super::weights::PreAveragingWeights;

/// Equal-weight Cauchy combination of the pre-averaged and local-average
/// p-values.
pub fn noisy_cauchy(p_pa: f64, p_la: f64) -> Result<(f64, f64)> {
    cauchy_combine_equal(&[p_pa, p_la])
}

/// Both sides of `Σ_l ρ_l E|√(a+b)N + x|^{p-2l} (2b)^l = E|√a N + x|^p`.
pub fn noise_shift_identity_check(p: u32, a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    if !(a >= 0.0 && b >= 0.0 && x.is_finite()) {
        return invalid("identity check needs a, b >= 0 and finite x");
    }
    let rho = rho_coefficients::<f64>(p)?;
    let lhs = rho
        .iter()
        .enumerate()
        .map(|(l, &r)| {
            let q = p - 2 * l as u32;
            let shift = if l == 0 { 1.0 } else { (2.0 * b).powi(l as i32) };
            r * shifted_even_moment(q, a + b, x) * shift
        })
        .sum();
    Ok((lhs, shifted_even_moment(p, a, x)))
}

/// `d_φ = ∫∫ D_φ(y, u) du F(dy)` with
/// `D_φ(y, u) = E|√v E + yφ(u)|^p - m_p v^{p/2}` and `v = θφ̄(2)`.
fn dense_functional(w: &PreAveragingWeights, p: u32, theta: f64, mark: &MarkLaw) -> f64 {
    let v = theta * w.bar(2.0);
    (1..=p / 2)
        .map(|j| {
            binomial(p as u64, 2 * j as u64) as f64
                * double_factorial_odd((p / 2 - j) as u64) as f64
                * v.powi((p / 2 - j) as i32)
                * w.bar(2.0 * j as f64)
                * mark.even_moment(2 * j)
        })
        .sum()
}

/// Mean of the limiting normalized pre-averaged ratio under dense small
/// jumps, `ϑ(d_g - γ'γ''d_h) / (Σ^{1/2} γ' m_p θ^{p/2-1} h̄(2)^{p/2})`.
///
/// `sigma_hat` stands in for `Σ^{1/2}`; a null-calibrated self-normalizer
/// is the intended source.
pub fn noisy_dense_shift(
    cfg: &PaConfig,
    vartheta: f64,
    mark: &MarkLaw,
    sigma_hat: f64,
) -> Result<f64> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return invalid(format!("sigma_hat must be positive, got {sigma_hat}"));
    }
    if !vartheta.is_finite() {
        return invalid("vartheta must be finite");
    }
    mark.validate()?;
    let p = cfg.p;
    let d_g = dense_functional(&cfg.g, p, cfg.theta, mark);
    let d_h = dense_functional(&cfg.h, p, cfg.theta, mark);
    let scale = sigma_hat
        * cfg.gamma_prime
        * gaussian_abs_moment(p as f64)?
        * cfg.theta.powi(p as i32 / 2 - 1)
        * cfg.h.bar(2.0).powi(p as i32 / 2);
    Ok(vartheta * (d_g - cfg.gamma_prime * cfg.gamma_second * d_h) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::weights::{build_weights, WeightKind};
    use crate::rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn config() -> PaConfig {
        PaConfig::from_rates(4, 1.0, 0.85, 1.0 / 4_680.0).unwrap()
    }

    #[test]
    fn identity_without_noise_term() {
        for p in [4, 6, 8] {
            let (l, r) = noise_shift_identity_check(p, 1.3, 0.0, -0.4).unwrap();
            assert_eq!(l, r);
        }
    }

    #[test]
    fn identity_p4_hand_case() {
        let (l, r) = noise_shift_identity_check(4, 1.0, 2.0, 0.7).unwrap();
        // E|N + 0.7|^4 = 3 + 6·0.49 + 0.7^4
        let direct = 3.0 + 6.0 * 0.49 + 0.7f64.powi(4);
        assert!((r - direct).abs() < 1e-12);
        assert!((l - r).abs() < 1e-10);
    }

    #[test]
    fn identity_random_sweep() {
        let mut g = rng::stream(7);
        let mut worst = 0.0f64;
        for _ in 0..1_000 {
            let (a, b, x) = (g.random_range(0.0..5.0), g.random_range(0.0..5.0), g.random_range(0.0..5.0));
            for p in [4, 6, 8] {
                let (l, r) = noise_shift_identity_check(p, a, b, x).unwrap();
                worst = worst.max((l - r).abs());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn dense_functional_matches_simulation() {
        let w = build_weights(WeightKind::Sine, 50).unwrap();
        let mark = MarkLaw::centered_normal(0.5);
        let exact = dense_functional(&w, 4, 1.2, &mark);
        let mut g = rng::stream(11);
        let v: f64 = 1.2 * 0.5;
        let draws = 400_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let u: f64 = g.random();
            let y = mark.sample(&mut g);
            let e: f64 = StandardNormal.sample(&mut g);
            let x = v.sqrt() * e + y * (std::f64::consts::PI * u).sin();
            acc += x.powi(4) - 3.0 * v * v;
        }
        let mc = acc / draws as f64;
        assert!((mc - exact).abs() < 0.03 * exact.abs().max(0.1), "{mc} vs {exact}");
    }

    #[test]
    fn shift_edge_cases() {
        let cfg = config();
        let mark = MarkLaw::centered_normal(1.0);
        assert_eq!(noisy_dense_shift(&cfg, 0.0, &mark, 2.0).unwrap(), 0.0);
        let zero = MarkLaw::PointMass { value: 0.0 };
        assert_eq!(noisy_dense_shift(&cfg, 3.0, &zero, 2.0).unwrap(), 0.0);
        let one = noisy_dense_shift(&cfg, 1.5, &mark, 2.0).unwrap();
        let two = noisy_dense_shift(&cfg, 3.0, &mark, 2.0).unwrap();
        assert_eq!(two, 2.0 * one);
        assert!(noisy_dense_shift(&cfg, 1.0, &mark, 0.0).is_err());
    }

    #[test]
    fn cauchy_pair() {
        assert!((noisy_cauchy(0.5, 0.5).unwrap().1 - 0.5).abs() < 1e-12);
        assert!(noisy_cauchy(0.7, 1e-12).unwrap().1 < 1e-11);
    }
}
