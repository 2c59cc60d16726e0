//! Brauer reluctivity `nu(B) = k1 exp(k2 B^2) + k3`.

use crate::diode::exp_c1;

/// Bound on `k2 B^2` beyond which the exponential is continued linearly.
pub const BRAUER_CLAMP: f64 = 30.0;

/// Reluctivity of free space, `1 / mu_0` in m/H.
pub const NU_0: f64 = 1.0 / (4.0e-7 * std::f64::consts::PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrauerParams {
    /// m/H
    pub k1: f64,
    /// 1/T^2
    pub k2: f64,
    /// m/H
    pub k3: f64,
}

impl BrauerParams {
    pub fn new(k1: f64, k2: f64, k3: f64) -> Self {
        Self { k1, k2, k3 }
    }

    pub fn linear(nu: f64) -> Self {
        Self {
            k1: 0.0,
            k2: 0.0,
            k3: nu,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.k1, self.k2, self.k3]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.k1 + self.k3 > 0.0
    }

    /// `(nu, d nu / d(B^2))` at squared flux density `b2`.
    pub fn eval_b2(&self, b2: f64) -> (f64, f64) {
        let (e, de) = exp_c1(self.k2 * b2, BRAUER_CLAMP);
        (self.k1 * e + self.k3, self.k1 * self.k2 * de)
    }
}

/// Reluctivity and its derivative with respect to `B^2` at flux density `b`.
pub fn brauer_nu(b: f64, params: &BrauerParams) -> (f64, f64) {
    params.eval_b2(b * b)
}
