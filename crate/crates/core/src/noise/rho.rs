use crate::error::{invalid, Result};
use crate::numerics::{binomial, double_factorial_odd};
use crate::scalar::Field;

fn check_order(p: u32) -> Result<()> {
    if p < 4 || p % 2 != 0 {
        return invalid(format!("noise-correction order must be even and >= 4, got {p}"));
    }
    Ok(())
}

/// Coefficient `2^l m_{2j-2l} C(p-2l, p-2j)` of `ρ_l` in row `j`.
fn coefficient<F: Field>(p: u32, j: u32, l: u32) -> F {
    let c = (1i128 << l)
        * double_factorial_odd((j - l) as u64) as i128
        * binomial((p - 2 * l) as u64, (p - 2 * j) as u64) as i128;
    F::from_int(i64::try_from(c).expect("coefficient fits in i64"))
}

/// Weights `ρ_0..ρ_{p/2}` that remove the noise contribution from even
/// powers of pre-averaged returns: `ρ_0 = 1` and for `j = 1..p/2`,
/// `Σ_{l≤j} 2^l m_{2j-2l} C(p-2l, p-2j) ρ_l = 0`. Solved by forward
/// substitution; exact when `F` is a rational type.
pub fn rho_coefficients<F: Field>(p: u32) -> Result<Vec<F>> {
    check_order(p)?;
    let mut rho: Vec<F> = vec![F::one()];
    for j in 1..=p / 2 {
        let mut acc = F::zero();
        for (l, r) in rho.iter().enumerate() {
            acc = acc + coefficient::<F>(p, j, l as u32) * r.clone();
        }
        let diag = coefficient::<F>(p, j, j);
        rho.push(F::zero() - acc / diag);
    }
    Ok(rho)
}

/// Left-hand sides of the triangular system for `j = 1..p/2` at `rho`.
pub fn rho_residuals<F: Field>(p: u32, rho: &[F]) -> Result<Vec<F>> {
    check_order(p)?;
    if rho.len() != (p / 2 + 1) as usize {
        return invalid("ρ vector has the wrong length");
    }
    Ok((1..=p / 2)
        .map(|j| {
            (0..=j).fold(F::zero(), |acc, l| {
                acc + coefficient::<F>(p, j, l) * rho[l as usize].clone()
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn order_four_by_hand() {
        // j=1: 6 + 2ρ_1 = 0; j=2: 3 + 2·1·ρ_1 + 4ρ_2 = 0.
        let exact: Vec<Rational> = rho_coefficients(4).unwrap();
        assert_eq!(
            exact,
            vec![Rational::from_integer(1), Rational::from_integer(-3), Rational::new(3, 4)]
        );
        let float: Vec<f64> = rho_coefficients(4).unwrap();
        assert_eq!(float, vec![1.0, -3.0, 0.75]);
    }

    #[test]
    fn residuals_vanish() {
        for p in [4u32, 6, 8, 10] {
            let rho: Vec<f64> = rho_coefficients(p).unwrap();
            assert_eq!(rho[0], 1.0);
            for r in rho_residuals(p, &rho).unwrap() {
                assert!(r.abs() < 1e-12, "p={p}: {r}");
            }
            let exact: Vec<Rational> = rho_coefficients(p).unwrap();
            assert!(rho_residuals(p, &exact).unwrap().iter().all(|r| *r == Rational::from_integer(0)));
        }
    }

    #[test]
    fn odd_or_small_orders_rejected() {
        assert!(rho_coefficients::<f64>(5).is_err());
        assert!(rho_coefficients::<f64>(2).is_err());
    }
}
