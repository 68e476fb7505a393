use super::{Family, JohnsonParams};
use crate::error::{Error, Result};
use crate::scalar::{norm_cdf, Real};
use crate::simulation::sorted_quantile;

/// Slifker-Shapiro abscissa recommended for moderate samples.
pub const DEFAULT_Z: f64 = 0.524;
const SU_ABOVE: f64 = 1.001;
const SB_BELOW: f64 = 0.999;
/// `|ln(m/p)|` below which the SL band collapses to the normal.
const NORMAL_LIMIT: f64 = 1e-4;

/// Data values at the normal probabilities `Phi(3z), Phi(z), Phi(-z), Phi(-3z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercentileSpread<T> {
    pub z: T,
    pub x3z: T,
    pub xz: T,
    pub xmz: T,
    pub xm3z: T,
}

impl<T: Real> PercentileSpread<T> {
    /// Spread read off a quantile function.
    pub fn from_quantile_fn(z: T, q: impl Fn(T) -> T) -> Result<Self> {
        check_z(z)?;
        let three = T::lit(3.0);
        let s = PercentileSpread {
            z,
            x3z: q(norm_cdf(three * z)),
            xz: q(norm_cdf(z)),
            xmz: q(norm_cdf(-z)),
            xm3z: q(norm_cdf(-three * z)),
        };
        s.check()?;
        Ok(s)
    }

    /// Spread from sample quantiles; needs at least four distinct values.
    pub fn from_samples(samples: &[T], z: T) -> Result<Self> {
        check_z(z)?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let distinct = 1 + sorted.windows(2).filter(|w| w[1] > w[0]).count();
        if sorted.is_empty() || distinct < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: if sorted.is_empty() { 0 } else { distinct } });
        }
        let q = |a: T| sorted_quantile(&sorted, a).expect("alpha inside (0, 1)");
        let three = T::lit(3.0);
        let s = PercentileSpread {
            z,
            x3z: q(norm_cdf(three * z)),
            xz: q(norm_cdf(z)),
            xmz: q(norm_cdf(-z)),
            xm3z: q(norm_cdf(-three * z)),
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let (m, n, p) = (self.m(), self.n(), self.p());
        if !(p > T::zero() && m > T::zero() && n > T::zero()) {
            return Err(Error::Degenerate(format!("percentile spread not strictly increasing (m={m}, n={n}, p={p})")));
        }
        Ok(())
    }

    pub fn p(&self) -> T {
        self.xz - self.xmz
    }

    pub fn m(&self) -> T {
        self.x3z - self.xz
    }

    pub fn n(&self) -> T {
        self.xmz - self.xm3z
    }

    /// Discriminant `m n / p^2`: above one SU, below one SB, one SL.
    pub fn d(&self) -> T {
        let p = self.p();
        self.m() * self.n() / (p * p)
    }

    fn reflected(&self) -> Self {
        PercentileSpread { z: self.z, x3z: -self.xm3z, xz: -self.xmz, xmz: -self.xz, xm3z: -self.x3z }
    }
}

fn check_z<T: Real>(z: T) -> Result<()> {
    if !(z > T::zero() && z.is_finite()) {
        return Err(Error::InvalidInput(format!("z must be positive, got {z}")));
    }
    Ok(())
}

/// Closed-form percentile fit; the result reproduces the four anchor
/// values exactly (to rounding) whichever family is selected.
pub fn fit_percentiles<T: Real>(s: &PercentileSpread<T>) -> Result<JohnsonParams<T>> {
    s.check()?;
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (m, n, p, z) = (s.m(), s.n(), s.p(), s.z);
    let d = s.d();
    let mid = half * (s.xz + s.xmz);
    let fitted = if d > T::lit(SU_ABOVE) {
        let (mp, np) = (m / p, n / p);
        let delta = two * z / (half * (mp + np)).acosh();
        let root = (mp * np - one).sqrt();
        let gamma = delta * ((np - mp) / (two * root)).asinh();
        let lambda = two * p * root / ((mp + np - two) * (mp + np + two).sqrt());
        let xi = mid + p * (np - mp) / (two * (mp + np - two));
        JohnsonParams { family: Family::SU, gamma, delta, xi, lambda }
    } else if d < T::lit(SB_BELOW) {
        let (pm, pn) = (p / m, p / n);
        let prod = (one + pm) * (one + pn);
        let delta = z / (half * prod.sqrt()).acosh();
        let denom = pm * pn - one;
        let gamma = delta * ((pn - pm) * (prod - T::lit(4.0)).sqrt() / (two * denom)).asinh();
        let lambda = p * ((prod - two).powi(2) - T::lit(4.0)).sqrt() / denom;
        let xi = mid - half * lambda + p * (pn - pm) / (two * denom);
        JohnsonParams { family: Family::SB, gamma, delta, xi, lambda }
    } else if m >= n {
        let mp = m / p;
        if mp.ln().abs() < T::lit(NORMAL_LIMIT) {
            JohnsonParams::normal(mid, p / (two * z))
        } else {
            let delta = two * z / mp.ln();
            let gamma = delta * ((mp - one) / (p * mp.sqrt())).ln();
            let xi = s.xz - ((z - gamma) / delta).exp();
            JohnsonParams { family: Family::SL, gamma, delta, xi, lambda: one }
        }
    } else {
        let mut r = fit_percentiles(&s.reflected())?;
        if r.family == Family::SL {
            r.xi = -r.xi;
            r.lambda = -one;
        } else {
            r = JohnsonParams::normal(mid, p / (two * z));
        }
        r
    };
    fitted.validate()?;
    Ok(fitted)
}

pub fn fit_percentiles_samples<T: Real>(samples: &[T], z: T) -> Result<JohnsonParams<T>> {
    fit_percentiles(&PercentileSpread::from_samples(samples, z)?)
}
