//! Polynomial-basis regression on one standardized conditioning feature:
//! least squares through a truncated SVD, and smoothed pinball-loss
//! quantile regression by full-batch gradient descent.

mod design;
mod pinball;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::Key;

pub use design::{fit_least_squares, fit_quantile, Design, QuantileOptions};
pub use pinball::{pinball_loss, smoothed_pinball};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Monomial,
    Laguerre,
}

/// Polynomial family, degree, conditioning feature and the affine map
/// `u = (x - shift) / scale` applied before expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub degree: usize,
    #[serde(default)]
    pub feature: Key,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl BasisSpec {
    pub fn new(kind: BasisKind, degree: usize, feature: Key) -> Self {
        BasisSpec { kind, degree, feature, shift: 0.0, scale: 1.0 }
    }

    pub fn laguerre(degree: usize) -> Self {
        Self::new(BasisKind::Laguerre, degree, Key::ByX)
    }

    pub fn monomial(degree: usize) -> Self {
        Self::new(BasisKind::Monomial, degree, Key::ByX)
    }

    pub fn with_feature(mut self, feature: Key) -> Self {
        self.feature = feature;
        self
    }

    /// Zero mean, unit variance on `x`; a constant feature keeps scale 1.
    pub fn standardized_for(mut self, x: &[f64]) -> Self {
        let n = x.len().max(1) as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        self.shift = mean;
        self.scale = if sd > 1e-300 && sd.is_finite() { sd } else { 1.0 };
        self
    }

    pub fn n_coeffs(&self) -> usize {
        self.degree + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite() && self.shift.is_finite()) {
            return Err(Error::InvalidInput(format!("basis standardization ({}, {}) invalid", self.shift, self.scale)));
        }
        if self.degree > 64 {
            return Err(Error::InvalidInput(format!("basis degree {} above 64", self.degree)));
        }
        Ok(())
    }

    /// Basis functions at `x` written into `out[..=degree]`.
    #[inline]
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let u = (x - self.shift) / self.scale;
        out[0] = 1.0;
        if self.degree == 0 {
            return;
        }
        match self.kind {
            BasisKind::Monomial => {
                for k in 1..=self.degree {
                    out[k] = out[k - 1] * u;
                }
            }
            BasisKind::Laguerre => {
                out[1] = 1.0 - u;
                for k in 1..self.degree {
                    let kf = k as f64;
                    out[k + 1] = ((2.0 * kf + 1.0 - u) * out[k] - kf * out[k - 1]) / (kf + 1.0);
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_coeffs()];
        self.eval_into(x, &mut v);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub residual_rms: f64,
    /// Ratio of the largest to the smallest retained singular value of the
    /// column-scaled design.
    pub condition: f64,
    pub rank: usize,
    pub iterations: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub basis: BasisSpec,
    pub coeffs: Vec<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    kind: BasisKind,
    degree: usize,
    feature: Key,
    shift: f64,
    scale: f64,
    coeffs: Vec<f64>,
}

impl LinearModel {
    pub fn constant(c: f64) -> Self {
        LinearModel { basis: BasisSpec::monomial(0), coeffs: vec![c], diagnostics: Diagnostics::default() }
    }

    pub fn predict(&self, x: f64) -> f64 {
        let mut buf = [0.0; 65];
        let b = &mut buf[..self.basis.n_coeffs()];
        self.basis.eval_into(x, b);
        b.iter().zip(&self.coeffs).map(|(a, c)| a * c).sum()
    }

    pub fn predict_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.predict(x)).collect()
    }

    pub fn to_json(&self) -> String {
        let r = ModelRecord {
            kind: self.basis.kind,
            degree: self.basis.degree,
            feature: self.basis.feature,
            shift: self.basis.shift,
            scale: self.basis.scale,
            coeffs: self.coeffs.clone(),
        };
        serde_json::to_string(&r).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: ModelRecord = serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("model JSON: {e}")))?;
        let basis = BasisSpec { kind: r.kind, degree: r.degree, feature: r.feature, shift: r.shift, scale: r.scale };
        basis.validate()?;
        if r.coeffs.len() != basis.n_coeffs() || r.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("model coefficients malformed".into()));
        }
        Ok(LinearModel { basis, coeffs: r.coeffs, diagnostics: Diagnostics::default() })
    }
}

pub fn predict(model: &LinearModel, x: f64) -> f64 {
    model.predict(x)
}
