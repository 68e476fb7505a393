//! Johnson translation system `z = gamma + delta * h((x - xi) / lambda)`
//! with `h` one of `ln y` (SL), `ln(y / (1 - y))` (SB), `asinh y` (SU) or
//! the identity (SN), plus moment and percentile fitting and the
//! Cornish-Fisher expansion.

pub mod cornish_fisher;
pub mod moments;
pub mod percentile;
mod quad;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm_cdf, norm_inv, norm_pdf, Real};

pub use cornish_fisher::{cornish_fisher_quantile, cornish_fisher_z, KurtosisConvention};
pub use moments::{
    central_from_raw, fit_moments, fit_moments_default, project_beta, raw_moments, validate_beta, BetaCheck,
    MomentSet, SL_BAND,
};
pub use percentile::{fit_percentiles, fit_percentiles_samples, PercentileSpread, DEFAULT_Z};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    SL,
    SB,
    SU,
    SN,
}

/// A fitted Johnson distribution. SN stores `lambda` as the standard
/// deviation, `delta = 1`, `xi = 0` and `gamma = -mean / sd`. SL uses
/// `lambda = +1` or `-1`, the sign giving the direction of the long tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JohnsonParams<T> {
    pub family: Family,
    pub gamma: T,
    pub delta: T,
    pub xi: T,
    pub lambda: T,
}

impl<T: Real> JohnsonParams<T> {
    pub fn normal(mean: T, sd: T) -> Self {
        JohnsonParams { family: Family::SN, gamma: -mean / sd, delta: T::one(), xi: T::zero(), lambda: sd }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.delta, self.xi, self.lambda].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput(format!("non-finite Johnson parameters {self:?}")));
        }
        if self.delta <= T::zero() {
            return Err(Error::InvalidInput(format!("delta must be > 0, got {}", self.delta)));
        }
        let lambda_ok = match self.family {
            Family::SL => self.lambda.abs() == T::one(),
            _ => self.lambda > T::zero(),
        };
        if !lambda_ok {
            return Err(Error::InvalidInput(format!("invalid lambda {} for {:?}", self.lambda, self.family)));
        }
        Ok(())
    }

    /// Inverse of `h`.
    #[inline]
    fn h_inv(&self, u: T) -> T {
        match self.family {
            Family::SN => u,
            Family::SL => u.exp(),
            Family::SU => u.sinh(),
            Family::SB => T::one() / (T::one() + (-u).exp()),
        }
    }

    /// `(h(y), h'(y))`, or `None` outside the support.
    #[inline]
    fn h(&self, y: T) -> Option<(T, T)> {
        let one = T::one();
        match self.family {
            Family::SN => Some((y, one)),
            Family::SL => (y > T::zero()).then(|| (y.ln(), one / y)),
            Family::SU => Some((y.asinh(), one / (one + y * y).sqrt())),
            Family::SB => (y > T::zero() && y < one).then(|| ((y / (one - y)).ln(), one / (y * (one - y)))),
        }
    }

    /// Distribution value at the standard-normal abscissa `z`.
    #[inline]
    pub fn at_z(&self, z: T) -> T {
        self.xi + self.lambda * self.h_inv((z - self.gamma) / self.delta)
    }

    pub fn quantile(&self, alpha: T) -> Result<T> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let a = if self.lambda < T::zero() { T::one() - alpha } else { alpha };
        Ok(self.at_z(norm_inv(a)))
    }

    pub fn cdf(&self, x: T) -> T {
        let y = (x - self.xi) / self.lambda;
        let flip = self.lambda < T::zero();
        match self.h(y) {
            Some((hy, _)) => {
                let u = self.gamma + self.delta * hy;
                norm_cdf(if flip { -u } else { u })
            }
            None => {
                let above = match self.family {
                    Family::SB => y >= T::one(),
                    _ => false,
                };
                if above != flip {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn pdf(&self, x: T) -> T {
        let y = (x - self.xi) / self.lambda;
        match self.h(y) {
            Some((hy, dh)) => self.delta / self.lambda.abs() * dh * norm_pdf(self.gamma + self.delta * hy),
            None => T::zero(),
        }
    }

    pub fn cast<U: Real>(&self) -> JohnsonParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        JohnsonParams { family: self.family, gamma: c(self.gamma), delta: c(self.delta), xi: c(self.xi), lambda: c(self.lambda) }
    }
}

impl JohnsonParams<f64> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("Johnson JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }
}

pub fn johnson_quantile<T: Real>(params: &JohnsonParams<T>, alpha: T) -> Result<T> {
    params.quantile(alpha)
}

pub fn johnson_pdf<T: Real>(params: &JohnsonParams<T>, x: T) -> T {
    params.pdf(x)
}

pub fn johnson_cdf<T: Real>(params: &JohnsonParams<T>, x: T) -> T {
    params.cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(family: Family, gamma: f64, delta: f64, xi: f64, lambda: f64) -> JohnsonParams<f64> {
        JohnsonParams { family, gamma, delta, xi, lambda }
    }

    #[test]
    fn closed_form_quantiles() {
        assert!(p(Family::SU, 0.0, 1.0, 0.0, 1.0).quantile(0.5).unwrap().abs() < 1e-15);
        assert!((p(Family::SL, 0.0, 1.0, 0.0, 1.0).quantile(0.5).unwrap() - 1.0).abs() < 1e-15);
        let z = norm_inv(0.01);
        assert!((p(Family::SL, 0.0, 1.0, 0.0, 1.0).quantile(0.01).unwrap() - f64::exp(z)).abs() < 1e-14);
        let sn = JohnsonParams::normal(2.0, 3.0);
        assert!((sn.quantile(0.01).unwrap() - (2.0 + 3.0 * z)).abs() < 1e-12);
        assert!(sn.quantile(1.0).is_err());
    }

    #[test]
    fn sb_density_integrates_to_one() {
        let sb = p(Family::SB, 0.0, 1.0, 0.0, 1.0);
        // substitution x = logistic(u) removes the endpoint singularities
        let mut s = 0.0;
        let h = 1e-3;
        for i in -40_000..=40_000 {
            let u = i as f64 * h;
            let x = 1.0 / (1.0 + (-u).exp());
            s += sb.pdf(x) * x * (1.0 - x) * h;
        }
        assert!((s - 1.0).abs() < 1e-8, "{s}");
        assert_eq!(sb.pdf(-0.1), 0.0);
        assert_eq!(sb.pdf(1.1), 0.0);
    }

    #[test]
    fn reflected_lognormal() {
        let sl = p(Family::SL, 0.2, 1.5, 3.0, -1.0);
        let q = sl.quantile(0.01).unwrap();
        assert!(q < 3.0);
        assert!((sl.cdf(q) - 0.01).abs() < 1e-12);
        assert_eq!(sl.pdf(3.5), 0.0);
        assert_eq!(sl.cdf(3.5), 1.0);
    }

    #[test]
    fn json_record_round_trip() {
        let sb = p(Family::SB, -0.3, 0.8, 1.0, 2.5);
        let s = sb.to_json();
        assert!(s.contains("\"family\":\"SB\""));
        assert_eq!(JohnsonParams::from_json(&s).unwrap(), sb);
        assert!(JohnsonParams::from_json(r#"{"family":"SU","gamma":0,"delta":-1,"xi":0,"lambda":1}"#).is_err());
    }

    #[test]
    fn single_precision_quantile() {
        let su = JohnsonParams::<f32> { family: Family::SU, gamma: 0.5, delta: 1.2, xi: 0.0, lambda: 1.0 };
        let q = su.quantile(0.2f32).unwrap();
        assert!((su.cdf(q) - 0.2).abs() < 1e-5);
    }

    fn any_params() -> impl Strategy<Value = JohnsonParams<f64>> {
        (0..4usize, -2.0f64..2.0, 0.3f64..4.0, -5.0f64..5.0, 0.2f64..5.0, any::<bool>()).prop_map(
            |(f, gamma, delta, xi, lam, neg)| {
                let family = [Family::SL, Family::SB, Family::SU, Family::SN][f];
                let lambda = match family {
                    Family::SL => if neg { -1.0 } else { 1.0 },
                    _ => lam,
                };
                JohnsonParams { family, gamma, delta, xi, lambda }
            },
        )
    }

    proptest! {
        #[test]
        fn quantile_monotone_and_cdf_inverse(params in any_params()) {
            let mut prev = f64::NEG_INFINITY;
            for i in 1..100 {
                let a = i as f64 / 100.0;
                let q = params.quantile(a).unwrap();
                prop_assert!(q > prev);
                prev = q;
                prop_assert!((params.cdf(q) - a).abs() < 1e-10);
            }
        }
    }
}
