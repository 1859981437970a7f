//! Special functions, tail probabilities and quadrature shared by the test
//! statistics.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, JumpError, Result};

/// `E|N|^r` for a standard normal `N`.
pub fn gaussian_abs_moment(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("moment order must be finite and >= 0, got {r}"));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    // Even integer orders are double factorials; keep them exact.
    if r.fract() == 0.0 && (r as u64) % 2 == 0 && r <= 60.0 {
        return Ok(double_factorial_odd((r as u64) / 2) as f64);
    }
    let log_m = 0.5 * r * 2f64.ln() + ln_gamma(0.5 * (r + 1.0)) - 0.5 * PI.ln();
    Ok(log_m.exp())
}

/// `(2j-1)!! = E N^{2j}`.
pub fn double_factorial_odd(j: u64) -> u128 {
    (1..=j).map(|i| (2 * i - 1) as u128).product()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `2(1 - Φ(|z|))`, evaluated through `erfc` so deep tails keep precision.
pub fn two_sided_normal_pvalue(z: f64) -> f64 {
    erfc(z.abs() / SQRT_2).clamp(0.0, 1.0)
}

/// Upper tail of the standard Gumbel law, `1 - exp(-e^{-x})`.
pub fn gumbel_upper_tail(x: f64) -> f64 {
    (-(-(-x).exp()).exp_m1()).clamp(0.0, 1.0)
}

/// Centering and scale `(C_n, a_n)` for the maximum of `n` absolute
/// standard normals.
pub fn gumbel_constants(n: usize) -> (f64, f64) {
    let ln_n = (n as f64).ln();
    let root = (2.0 * ln_n).sqrt();
    let center = root - (PI.ln() + ln_n.ln()) / (2.0 * root);
    (center, 1.0 / root)
}

/// Pairwise summation with a fixed split topology; the result depends only
/// on the slice contents, never on how work was scheduled.
pub fn tree_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` on `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4096;
    if !(a.is_finite() && b.is_finite()) {
        return invalid("integration limits must be finite");
    }
    let mut pieces = vec![(a, b, gk15(&f, a, b))];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.2 .1).sum();
        if total_err <= tol {
            let value = pieces.iter().map(|p| p.2 .0).sum::<f64>();
            if !value.is_finite() {
                return Err(JumpError::NumericFailure("non-finite integral".into()));
            }
            return Ok(value);
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(JumpError::NumericFailure(format!(
                "quadrature did not reach tolerance {tol:e} (estimated error {total_err:e})"
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        pieces.push((lo, mid, gk15(&f, lo, mid)));
        pieces.push((mid, hi, gk15(&f, mid, hi)));
    }
}

/// `E|√v N + x|^q` for even integer `q`, via the binomial expansion in
/// Gaussian moments.
pub fn shifted_even_moment(q: u32, v: f64, x: f64) -> f64 {
    assert!(q % 2 == 0, "order must be even");
    (0..=q / 2)
        .map(|j| {
            binomial(q as u64, 2 * j as u64) as f64
                * double_factorial_odd((q / 2 - j) as u64) as f64
                * v.powi((q / 2 - j) as i32)
                * x.powi(2 * j as i32)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn abs_moments() {
        assert_abs_diff_eq!(gaussian_abs_moment(2.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gaussian_abs_moment(4.0).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            gaussian_abs_moment(1.0).unwrap(),
            (2.0 / PI).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(gaussian_abs_moment(1.0).unwrap(), 0.797_884_560_8, epsilon = 1e-10);
        // E|N|^3 = 2√(2/π)
        assert_abs_diff_eq!(
            gaussian_abs_moment(3.0).unwrap(),
            2.0 * (2.0 / PI).sqrt(),
            epsilon = 1e-12
        );
        assert!(gaussian_abs_moment(-0.5).is_err());
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let v = integrate(|u| (PI * u).sin().powi(2), 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
        let v = integrate(normal_pdf, -10.0, 10.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        let v = integrate(|u| u.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn gumbel_constants_at_one_second_day() {
        // Direct evaluation of the centering for n = 23,400.
        let n = 23_400f64;
        let root = (2.0 * n.ln()).sqrt();
        let expected = root - (PI.ln() + n.ln().ln()) / (2.0 * root);
        let (c, a) = gumbel_constants(23_400);
        assert_abs_diff_eq!(c, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(c, 4.1007, epsilon = 5e-5);
        assert_abs_diff_eq!(a, 1.0 / root, epsilon = 1e-15);
    }

    #[test]
    fn shifted_moment_matches_direct_expansion() {
        // E(√2 N + 0.7)^4 = 3·4 + 6·2·0.49 + 0.7^4
        let direct = 12.0 + 6.0 * 2.0 * 0.49 + 0.7f64.powi(4);
        assert_abs_diff_eq!(shifted_even_moment(4, 2.0, 0.7), direct, epsilon = 1e-12);
    }

    #[test]
    fn tail_probabilities() {
        assert_abs_diff_eq!(two_sided_normal_pvalue(1.959_963_984_540_054), 0.05, epsilon = 1e-10);
        assert_abs_diff_eq!(gumbel_upper_tail(0.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert!(gumbel_upper_tail(50.0) > 0.0);
    }
}
