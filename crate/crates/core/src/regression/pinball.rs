use crate::scalar::Real;

/// `alpha * r` for `r >= 0`, `(alpha - 1) * r` otherwise.
pub fn pinball_loss<T: Real>(r: T, alpha: T) -> T {
    if r >= T::zero() {
        alpha * r
    } else {
        (alpha - T::one()) * r
    }
}

/// Pinball loss with the kink replaced by a quadratic on `|r| < width`,
/// returning the loss and its derivative in `r`.
#[inline]
pub fn smoothed_pinball<T: Real>(r: T, alpha: T, width: T) -> (T, T) {
    let half = T::lit(0.5);
    let slope = if r >= T::zero() { alpha } else { T::one() - alpha };
    let a = r.abs();
    if a < width {
        (slope * half * r * r / width, slope * r / width)
    } else {
        (slope * (a - half * width), if r >= T::zero() { slope } else { -slope })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn branches() {
        assert!((pinball_loss(1.0, 0.99) - 0.99f64).abs() < 1e-15);
        assert!((pinball_loss(-1.0, 0.99) - 0.01f64).abs() < 1e-15);
        for a in [0.01, 0.5, 0.99] {
            assert_eq!(pinball_loss(0.0f64, a), 0.0);
        }
        assert!((pinball_loss(-2.0f32, 0.25) - 1.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn smoothing_is_continuous_and_close(r in -5.0f64..5.0, alpha in 0.01f64..0.99, w in 1e-4f64..0.5) {
            let (l, d) = smoothed_pinball(r, alpha, w);
            prop_assert!(l >= 0.0);
            prop_assert!((l - pinball_loss(r, alpha)).abs() <= 0.5 * w + 1e-15);
            let h = 1e-7;
            let fd = (smoothed_pinball(r + h, alpha, w).0 - smoothed_pinball(r - h, alpha, w).0) / (2.0 * h);
            prop_assert!((fd - d).abs() < 1e-5);
        }
    }
}
