//! Scalar abstraction shared by the closed-form kernels.
//!
//! Pricing formulas, the Johnson system, Cornish-Fisher and the pinball loss
//! are written against [`Real`] so they run in `f32` or `f64`. Special
//! functions are evaluated in `f64` and cast back, which is exact for `f32`
//! and a no-op for `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use statrs::distribution::{ContinuousCDF, Normal};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    (-half * x * x).exp() / (T::TAU()).sqrt()
}

/// Standard normal distribution function, accurate in both tails.
pub fn norm_cdf<T: Real>(x: T) -> T {
    let v = x.as_f64();
    T::lit(0.5 * libm::erfc(-v / std::f64::consts::SQRT_2))
}

/// Standard normal quantile `z_p`.
pub fn norm_inv<T: Real>(p: T) -> T {
    let p = p.as_f64();
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    T::lit(n.inverse_cdf(p))
}
