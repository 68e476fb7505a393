use super::{check_alpha, ImCross, MethodSpec, Scenario};
use crate::error::{Error, Result};
use crate::johnson::{cornish_fisher_quantile, KurtosisConvention};
use crate::models::{greeks, Model};
use crate::scalar::{norm_inv, Real};
use crate::simulation::DeltaVCross;

fn check_dt<T: Real>(dt: T) -> Result<()> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("delta_t must be > 0, got {dt}")));
    }
    Ok(())
}

/// `E[dV^i]`, `i = 1..5`, for `dV = d R + g R^2 / 2` with `R ~ N(0, omega)`.
pub fn dg_raw_moments<T: Real>(d: T, g: T, omega: T) -> [T; 5] {
    let c = T::lit;
    let (d2, g2, o2) = (d * d, g * g, omega * omega);
    let o3 = o2 * omega;
    let o4 = o2 * o2;
    [
        c(0.5) * g * omega,
        d2 * omega + c(0.75) * g2 * o2,
        c(1.5) * d2 * g * c(3.0) * o2 + c(0.125) * g2 * g * c(15.0) * o3,
        d2 * d2 * c(3.0) * o2 + c(1.5) * d2 * g2 * c(15.0) * o3 + c(1.0 / 16.0) * g2 * g2 * c(105.0) * o4,
        c(2.5) * d2 * d2 * g * c(15.0) * o3
            + c(1.25) * d2 * g2 * g * c(105.0) * o4
            + c(1.0 / 32.0) * g2 * g2 * g * c(945.0) * o4 * omega,
    ]
}

/// Normal quantile with the delta-gamma mean and variance over `dt`.
pub fn delta_gamma_normal<T: Real>(delta_cash: T, gamma_cash: T, sigma: T, dt: T, alpha: T) -> Result<T> {
    check_dt(dt)?;
    check_alpha(alpha.as_f64())?;
    let omega = sigma * sigma * dt;
    let half = T::lit(0.5);
    let mean = half * gamma_cash * omega;
    let var = half * (gamma_cash * omega).powi(2) + delta_cash * delta_cash * omega;
    Ok(mean + norm_inv(alpha) * var.sqrt())
}

/// Cumulants `k1..k5` of `dV = d R + g R^2 / 2` with `R ~ N(0, omega)`:
/// `k_r = (r-1)! l^r / 2 + r! d^2 omega l^(r-2) / 2` with `l = g omega`.
pub fn dg_cumulants<T: Real>(d: T, g: T, omega: T) -> [T; 5] {
    let c = T::lit;
    let l = g * omega;
    let dd = d * d * omega;
    [
        c(0.5) * l,
        c(0.5) * l * l + dd,
        l * l * l + c(3.0) * dd * l,
        c(3.0) * l.powi(4) + c(12.0) * dd * l * l,
        c(12.0) * l.powi(5) + c(60.0) * dd * l.powi(3),
    ]
}

/// Cornish-Fisher quantile from the first five delta-gamma moments.
pub fn delta_gamma_cf<T: Real>(
    delta_cash: T,
    gamma_cash: T,
    sigma: T,
    dt: T,
    alpha: T,
    convention: KurtosisConvention,
) -> Result<T> {
    check_dt(dt)?;
    check_alpha(alpha.as_f64())?;
    // the quantile is homogeneous of degree one in (delta, gamma)
    let scale = delta_cash.abs().max(gamma_cash.abs());
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let c = T::lit;
    let [k1, k2, k3, k4, k5] = dg_cumulants(delta_cash / scale, gamma_cash / scale, sigma * sigma * dt);
    if !(k2 > T::zero()) {
        return Err(Error::Degenerate(format!("delta-gamma variance {k2} is not positive")));
    }
    let sd = k2.sqrt();
    let s3 = k3 / (k2 * sd);
    let beta2 = k4 / (k2 * k2) + c(3.0);
    // fifth standardized central moment: (k5 + 10 k3 k2) / k2^(5/2)
    let s5 = (k5 + c(10.0) * k3 * k2) / (k2 * k2 * sd);
    Ok(scale * (k1 + sd * cornish_fisher_quantile(s3, convention.k4(beta2), s5, alpha)?))
}

/// Per-path delta-gamma quantiles from closed-form sensitivities, scaled by
/// the path deflator into the cross-section's units. `None` selects the
/// normal variant.
pub fn delta_gamma_cross(
    scn: &Scenario,
    cross: &DeltaVCross,
    alpha: f64,
    cf: Option<KurtosisConvention>,
) -> Result<ImCross> {
    check_alpha(alpha)?;
    let Model::Gbm(params) = scn.model else {
        return Err(Error::Unsupported("delta-gamma estimators need a spot-driven model".into()));
    };
    let q = (0..cross.len())
        .map(|p| {
            let g = greeks(scn.model, scn.inst, cross.t, cross.x[p])?;
            let d = scn.outer.deflator(p, cross.t_index);
            let local = match cf {
                None => delta_gamma_normal(g.delta_cash, g.gamma_cash, params.sigma, scn.delta, alpha)?,
                Some(conv) => delta_gamma_cf(g.delta_cash, g.gamma_cash, params.sigma, scn.delta, alpha, conv)?,
            };
            Ok(d * local)
        })
        .collect::<Result<Vec<_>>>()?;
    let method = match cf {
        None => MethodSpec::DgNormal,
        Some(kurtosis) => MethodSpec::DgCf { kurtosis },
    };
    ImCross::from_quantiles(cross, q, method)
}
