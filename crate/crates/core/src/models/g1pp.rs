//! One-factor Gaussian short rate with deterministic shift fitted to a flat
//! initial curve: `r(t) = x(t) + phi(t)`, `dx = -a x dt + sigma dW`, `x(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G1ppParams {
    pub mean_reversion: f64,
    pub sigma: f64,
    pub flat_init_rate: f64,
}

impl Default for G1ppParams {
    fn default() -> Self {
        G1ppParams { mean_reversion: 0.03, sigma: 0.01, flat_init_rate: 0.03 }
    }
}

impl G1ppParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_reversion > 0.0 && self.mean_reversion.is_finite()) {
            return Err(Error::InvalidInput(format!("mean_reversion must be > 0, got {}", self.mean_reversion)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !self.flat_init_rate.is_finite() {
            return Err(Error::InvalidInput("flat_init_rate must be finite".into()));
        }
        Ok(())
    }
}

/// `(1 - e^{-a h}) / a`.
pub fn b_factor<T: Real>(a: T, h: T) -> T {
    -(-a * h).exp_m1() / a
}

/// Conditional variance of `x(t+h)` given `x(t)`.
pub fn factor_variance<T: Real>(a: T, sigma: T, h: T) -> T {
    sigma * sigma * (-(-T::lit(2.0) * a * h).exp_m1()) / (T::lit(2.0) * a)
}

/// Conditional variance of `int_t^{t+h} x(s) ds` given `x(t)`.
pub fn integral_variance<T: Real>(a: T, sigma: T, h: T) -> T {
    let two = T::lit(2.0);
    let b = b_factor(a, h);
    let v = sigma * sigma / (a * a) * (h - two * b + (-(-two * a * h).exp_m1()) / (two * a));
    v.max(T::zero())
}

/// Conditional covariance of `x(t+h)` and `int_t^{t+h} x(s) ds`.
pub fn factor_integral_covariance<T: Real>(a: T, sigma: T, h: T) -> T {
    let b = b_factor(a, h);
    sigma * sigma * b * b / T::lit(2.0)
}

/// `int_s^e phi(u) du` for the flat-curve shift
/// `phi(u) = r0 + sigma^2 / (2 a^2) (1 - e^{-a u})^2`.
pub fn shift_integral<T: Real>(a: T, sigma: T, r0: T, s: T, e: T) -> T {
    let two = T::lit(2.0);
    let h = e - s;
    let ea = (-a * s).exp() - (-a * e).exp();
    let e2a = (-two * a * s).exp() - (-two * a * e).exp();
    r0 * h + sigma * sigma / (two * a * a) * (h - two * ea / a + e2a / (two * a))
}

/// Zero-coupon bond `P(t, T) = A(t, T) exp(-B(t, T) x)` on a flat initial
/// curve at `r0`.
pub fn zero_bond<T: Real>(a: T, sigma: T, r0: T, t: T, mat: T, x: T) -> T {
    let half = T::lit(0.5);
    let v = |h: T| integral_variance(a, sigma, h);
    let log_a = -r0 * (mat - t) + half * (v(mat - t) - v(mat) + v(t));
    (log_a - b_factor(a, mat - t) * x).exp()
}

/// Discount factor `P(t, T)` for the short-rate factor value `x` at `t`.
pub fn g1pp_bond_price(params: &G1ppParams, t: f64, mat: f64, x: f64) -> Result<f64> {
    if !(t <= mat + 1e-12) {
        return Err(Error::InvalidInput(format!("bond maturity {mat} precedes valuation time {t}")));
    }
    if t < 0.0 || !x.is_finite() {
        return Err(Error::InvalidInput(format!("need t >= 0 and finite x, got t={t}, x={x}")));
    }
    if (mat - t).abs() <= 1e-12 {
        return Ok(1.0);
    }
    Ok(zero_bond(params.mean_reversion, params.sigma, params.flat_init_rate, t, mat, x))
}
