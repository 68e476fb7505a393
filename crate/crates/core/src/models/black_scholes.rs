//! Garman-Kohlhagen call valuation and its spot sensitivities.
//!
//! With `rate_fgn = 0` this is plain Black-Scholes on a non-dividend stock.

use crate::error::{Error, Result};
use crate::scalar::{norm_cdf, norm_pdf, Real};

fn check_inputs<T: Real>(spot: T, strike: T, rate_dom: T, rate_fgn: T, sigma: T, tau: T) -> Result<()> {
    for (name, v) in [
        ("spot", spot),
        ("strike", strike),
        ("rate_dom", rate_dom),
        ("rate_fgn", rate_fgn),
        ("sigma", sigma),
        ("tau", tau),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must be finite, got {v}")));
        }
    }
    if spot <= T::zero() || strike <= T::zero() {
        return Err(Error::InvalidInput(format!("spot and strike must be positive, got {spot}, {strike}")));
    }
    if tau < T::zero() || sigma < T::zero() {
        return Err(Error::InvalidInput(format!("tau and sigma must be non-negative, got {tau}, {sigma}")));
    }
    Ok(())
}

/// Present value of a call paying `(S_T - K)^+` at `tau` years from now.
pub fn bs_price<T: Real>(spot: T, strike: T, rate_dom: T, rate_fgn: T, sigma: T, tau: T) -> Result<T> {
    check_inputs(spot, strike, rate_dom, rate_fgn, sigma, tau)?;
    if tau == T::zero() {
        return Ok((spot - strike).max(T::zero()));
    }
    let df_dom = (-rate_dom * tau).exp();
    let df_fgn = (-rate_fgn * tau).exp();
    let fwd_spot = spot * df_fgn;
    let vol = sigma * tau.sqrt();
    let price = if vol <= T::epsilon() * T::epsilon() {
        (fwd_spot - strike * df_dom).max(T::zero())
    } else {
        let d1 = ((spot / strike).ln() + (rate_dom - rate_fgn) * tau) / vol + T::lit(0.5) * vol;
        let d2 = d1 - vol;
        fwd_spot * norm_cdf(d1) - strike * df_dom * norm_cdf(d2)
    };
    Ok(price.max(T::zero()).min(fwd_spot))
}

/// `(dV/dS, d2V/dS2)` of the call; requires `tau > 0`.
pub fn bs_delta_gamma<T: Real>(spot: T, strike: T, rate_dom: T, rate_fgn: T, sigma: T, tau: T) -> Result<(T, T)> {
    check_inputs(spot, strike, rate_dom, rate_fgn, sigma, tau)?;
    if tau <= T::zero() || sigma <= T::zero() {
        return Err(Error::InvalidInput("sensitivities need tau > 0 and sigma > 0".into()));
    }
    let df_fgn = (-rate_fgn * tau).exp();
    let vol = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate_dom - rate_fgn) * tau) / vol + T::lit(0.5) * vol;
    let delta = df_fgn * norm_cdf(d1);
    let gamma = df_fgn * norm_pdf(d1) / (spot * vol);
    Ok((delta, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Discounted payoff integrated against the lognormal density with
    /// composite Simpson in log-spot, independent of the closed form.
    fn lognormal_integral(spot: f64, strike: f64, rd: f64, rf: f64, sigma: f64, tau: f64) -> f64 {
        let m = (spot.ln()) + (rd - rf - 0.5 * sigma * sigma) * tau;
        let s = sigma * tau.sqrt();
        let (lo, hi) = (m - 12.0 * s, m + 12.0 * s);
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let f = |y: f64| {
            let dens = (-0.5 * ((y - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            (y.exp() - strike).max(0.0) * dens
        };
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        (-rd * tau).exp() * acc * h / 3.0
    }

    #[test]
    fn intrinsic_at_expiry() {
        assert_eq!(bs_price(120.0, 100.0, 0.05, 0.01, 0.3, 0.0).unwrap(), 20.0);
        assert_eq!(bs_price(80.0, 100.0, 0.05, 0.01, 0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn atm_matches_quadrature() {
        let oracle = lognormal_integral(100.0, 100.0, 0.0, 0.0, 0.2, 1.0);
        let v = bs_price(100.0, 100.0, 0.0, 0.0, 0.2, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        // frozen from the quadrature oracle
        assert!((v - 7.965_567_455_405_798).abs() < 1e-9);
    }

    #[test]
    fn fx_call_matches_quadrature() {
        let oracle = lognormal_integral(100.0, 105.0, 0.08, 0.02, 0.3, 1.0);
        let v = bs_price(100.0, 105.0, 0.08, 0.02, 0.3, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn rejects_non_finite() {
        assert!(bs_price(f64::NAN, 100.0, 0.0, 0.0, 0.2, 1.0).is_err());
        assert!(bs_price(100.0, 100.0, 0.0, 0.0, f64::INFINITY, 1.0).is_err());
        assert!(bs_price(100.0, 100.0, 0.0, 0.0, 0.2, -1.0).is_err());
    }

    #[test]
    fn zero_vol_is_discounted_forward_intrinsic() {
        let v = bs_price(100.0, 90.0, 0.05, 0.0, 0.0, 2.0).unwrap();
        assert!((v - (100.0 - 90.0 * (-0.1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let v32 = bs_price(100.0f32, 100.0, 0.0, 0.0, 0.2, 1.0).unwrap();
        assert!((v32 as f64 - 7.965_567_455).abs() < 1e-4);
    }

    proptest::proptest! {
        #[test]
        fn bounded_and_monotone(
            spot in 1.0f64..400.0, strike in 1.0f64..400.0, rd in -0.02f64..0.15,
            rf in 0.0f64..0.1, sigma in 0.01f64..1.0, tau in 0.0f64..10.0,
        ) {
            let v = bs_price(spot, strike, rd, rf, sigma, tau).unwrap();
            let cap = spot * (-rf * tau).exp();
            proptest::prop_assert!(v >= 0.0 && v <= cap * (1.0 + 1e-12));
            let up = bs_price(spot * 1.01, strike, rd, rf, sigma, tau).unwrap();
            proptest::prop_assert!(up >= v - 1e-12 * (1.0 + v));
        }
    }
}
