use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Linear interpolation between order statistics at position `(n-1) alpha`.
pub fn empirical_quantile<T: Real>(samples: &[T], alpha: T) -> Result<T> {
    let mut buf = samples.to_vec();
    quantile_in_place(&mut buf, alpha)
}

/// Same estimator as [`empirical_quantile`], reordering `buf` in place.
pub fn quantile_in_place<T: Real>(buf: &mut [T], alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if buf.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if buf.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("samples contain NaN".into()));
    }
    let n = buf.len();
    let h = T::from_usize(n - 1).expect("len fits") * alpha;
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let frac = h - T::from_usize(lo).expect("index fits");
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("no NaN");
    let (_, lo_val, upper) = buf.select_nth_unstable_by(lo, cmp);
    let lo_val = *lo_val;
    if lo + 1 >= n || frac == T::zero() {
        return Ok(lo_val);
    }
    let hi_val = upper.iter().copied().fold(T::infinity(), T::min);
    Ok(lo_val + frac * (hi_val - lo_val))
}

/// Quantile of data that is already sorted ascending.
pub fn sorted_quantile<T: Real>(sorted: &[T], alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if sorted.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = sorted.len();
    let h = T::from_usize(n - 1).expect("len fits") * alpha;
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let frac = h - T::from_usize(lo).expect("index fits");
    if lo + 1 >= n {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}
