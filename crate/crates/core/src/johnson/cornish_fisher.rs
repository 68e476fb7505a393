use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm_inv, Real};

/// How the fourth-order term enters the expansion: `Excess` passes
/// `beta2 - 3`, `Raw` passes `beta2` unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisConvention {
    #[default]
    Excess,
    Raw,
}

impl KurtosisConvention {
    pub fn k4<T: Real>(self, beta2: T) -> T {
        match self {
            KurtosisConvention::Excess => beta2 - T::lit(3.0),
            KurtosisConvention::Raw => beta2,
        }
    }
}

/// Seven-term expansion evaluated at a given normal abscissa.
pub fn cornish_fisher_z<T: Real>(k3: T, k4: T, k5: T, z: T) -> T {
    let c = T::lit;
    let z2 = z * z;
    let z3 = z2 * z;
    let z4 = z2 * z2;
    z + k3 * (z2 - c(1.0)) / c(6.0) + k4 * (z3 - c(3.0) * z) / c(24.0)
        - k3 * k3 * (c(2.0) * z3 - c(5.0) * z) / c(36.0)
        + k5 * (z4 - c(6.0) * z2 + c(3.0)) / c(120.0)
        - k3 * k4 * (z4 - c(5.0) * z2 + c(2.0)) / c(24.0)
        + k3 * k3 * k3 * (c(12.0) * z4 - c(53.0) * z2 + c(17.0)) / c(324.0)
}

/// Standardized quantile at level `alpha`.
pub fn cornish_fisher_quantile<T: Real>(k3: T, k4: T, k5: T, alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(cornish_fisher_z(k3, k4, k5, norm_inv(alpha)))
}
