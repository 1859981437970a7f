use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::integrate;

const QUAD_TOL: f64 = 1e-10;

/// Weight profile on `[0, 1]` built from `w(u) = sin(πu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Sine,
    /// `w(u)^a`, `a > 1`.
    SinePower { a: f64 },
}

impl WeightKind {
    fn exponent(self) -> f64 {
        match self {
            WeightKind::Sine => 1.0,
            WeightKind::SinePower { a } => a,
        }
    }

    pub fn value(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        (PI * u).sin().max(0.0).powf(self.exponent())
    }

    pub fn derivative(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        let a = self.exponent();
        let s = (PI * u).sin().max(0.0);
        let ds = PI * (PI * u).cos();
        if a == 1.0 {
            ds
        } else {
            a * s.powf(a - 1.0) * ds
        }
    }
}

/// Discretized weights `φ_j = φ(j/k_n)` with exact zero endpoints, their
/// first differences, and integral functionals of the continuous profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreAveragingWeights {
    pub kind: WeightKind,
    pub k_n: usize,
    /// `φ_0..φ_{k_n}`.
    pub phi: Vec<f64>,
    /// `Δ_jφ = φ_j - φ_{j-1}` for `j = 1..k_n`.
    pub dphi: Vec<f64>,
}

pub fn build_weights(kind: WeightKind, k_n: usize) -> Result<PreAveragingWeights> {
    if k_n < 4 {
        return invalid(format!("pre-averaging window must be at least 4, got {k_n}"));
    }
    if let WeightKind::SinePower { a } = kind {
        if !(a > 1.0 && a.is_finite()) {
            return invalid(format!("sine power must exceed 1, got {a}"));
        }
    }
    let mut phi: Vec<f64> = (0..=k_n).map(|j| kind.value(j as f64 / k_n as f64)).collect();
    phi[0] = 0.0;
    phi[k_n] = 0.0;
    let dphi = phi.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(PreAveragingWeights { kind, k_n, phi, dphi })
}

impl PreAveragingWeights {
    /// `φ̄(q) = ∫_0^1 |φ(u)|^q du`.
    pub fn bar(&self, q: f64) -> f64 {
        let kind = self.kind;
        integrate(|u| kind.value(u).abs().powf(q), 0.0, 1.0, QUAD_TOL)
            .expect("bounded smooth integrand")
    }

    /// `φ̄'(q) = ∫_0^1 |φ'(u)|^q du`.
    pub fn bar_prime(&self, q: f64) -> f64 {
        let kind = self.kind;
        integrate(|u| kind.derivative(u).abs().powf(q), 0.0, 1.0, QUAD_TOL)
            .expect("bounded smooth integrand")
    }

    pub fn value(&self, u: f64) -> f64 {
        self.kind.value(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_functionals() {
        let w = build_weights(WeightKind::Sine, 50).unwrap();
        assert!((w.bar(2.0) - 0.5).abs() < 1e-12);
        assert!((w.bar_prime(2.0) - PI * PI / 2.0).abs() < 1e-10);
        // ∫ sin^4 = 3/8
        assert!((w.bar(4.0) - 0.375).abs() < 1e-12);
        assert_eq!(w.phi[0], 0.0);
        assert_eq!(w.phi[50], 0.0);
        assert_eq!(w.dphi.len(), 50);
        assert!((w.dphi.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn sine_power_endpoints_and_errors() {
        let w = build_weights(WeightKind::SinePower { a: 2.0 }, 7).unwrap();
        assert_eq!((w.phi[0], w.phi[7]), (0.0, 0.0));
        assert!(build_weights(WeightKind::SinePower { a: 1.0 }, 10).is_err());
        assert!(build_weights(WeightKind::Sine, 3).is_err());
        // ∫ sin^8 = 35/128
        assert!((w.bar(4.0) - 35.0 / 128.0).abs() < 1e-12);
    }
}
