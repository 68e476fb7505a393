//! Conditional-quantile estimators. Each maps one margin-period
//! cross-section (plus, for some, fresh inner simulations) to a per-path
//! lower-tail quantile `q` and initial margin `max(0, -q)`.

mod delta_gamma;
mod lsmc;
mod nested;
mod pseudo;
mod quantile_reg;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::johnson::{KurtosisConvention, DEFAULT_Z};
use crate::models::{Instrument, Model};
use crate::regression::{BasisSpec, QuantileOptions};
use crate::simulation::{delta_v, sorted_quantile, DeltaVCross, InclusionRule, Key, OuterPathSet};

pub use delta_gamma::{dg_raw_moments, delta_gamma_cf, delta_gamma_cross, delta_gamma_normal};
pub use lsmc::{glsmc, jlsmc};
pub use nested::nested_mc;
pub use pseudo::{johnson_percentile_estimator, raw_pseudo};
pub use quantile_reg::quantile_reg_estimator;

/// Treatment of grid points whose regressed moments violate
/// `beta2 >= beta1 + 1` (or cannot be fitted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    Project,
    NormalFallback,
    Discard,
}

/// Regression targets for the four raw moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentSource {
    /// Powers of the single outer-path value change.
    #[default]
    Single,
    /// Per-path averages of powers over `n_inner` inner samples.
    InnerMean { n_inner: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PercentileSource {
    /// Fresh inner simulation at every path.
    Inner { n_inner: usize },
    /// `k` nearest neighbours at every `stride`-th path in key order.
    Pseudo {
        k: usize,
        stride: usize,
        #[serde(default)]
        key: Key,
    },
}

fn default_basis() -> BasisSpec {
    BasisSpec::laguerre(7)
}

fn default_eval_points() -> usize {
    200
}

fn default_k() -> usize {
    200
}

fn default_z() -> f64 {
    DEFAULT_Z
}

fn default_steps() -> usize {
    QuantileOptions::default().steps
}

fn default_learn_rate() -> f64 {
    QuantileOptions::default().learn_rate
}

fn default_n_inner() -> usize {
    500
}

fn default_percentile_source() -> PercentileSource {
    PercentileSource::Pseudo { k: 200, stride: 10, key: Key::ByX }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    NestedMc {
        #[serde(default = "default_n_inner")]
        n_inner: usize,
    },
    Glsmc {
        #[serde(default = "default_basis")]
        basis: BasisSpec,
    },
    Jlsmc {
        #[serde(default = "default_basis")]
        basis: BasisSpec,
        #[serde(default = "default_eval_points")]
        eval_points: usize,
        #[serde(default)]
        correction: Correction,
        #[serde(default)]
        moment_source: MomentSource,
    },
    QuantileReg {
        #[serde(default = "default_basis")]
        basis: BasisSpec,
        #[serde(default)]
        inner_augment: usize,
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default = "default_learn_rate")]
        learn_rate: f64,
        #[serde(default)]
        smoothing: Option<f64>,
    },
    DgNormal,
    DgCf {
        #[serde(default)]
        kurtosis: KurtosisConvention,
    },
    Jpp {
        #[serde(default = "default_percentile_source")]
        source: PercentileSource,
        #[serde(default = "default_z")]
        z: f64,
    },
    RawPseudo {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        key: Key,
    },
}

impl MethodSpec {
    /// Short stable label used in file outputs.
    pub fn id(&self) -> String {
        fn basis_tag(b: &BasisSpec) -> String {
            let kind = match b.kind {
                crate::regression::BasisKind::Laguerre => "lag",
                crate::regression::BasisKind::Monomial => "mono",
            };
            format!("{kind}{}_{}", b.degree, key_tag(b.feature))
        }
        fn key_tag(k: Key) -> &'static str {
            match k {
                Key::ByX => "x",
                Key::ByV => "v",
            }
        }
        match self {
            MethodSpec::NestedMc { n_inner } => format!("nested_mc_n{n_inner}"),
            MethodSpec::Glsmc { basis } => format!("glsmc_{}", basis_tag(basis)),
            MethodSpec::Jlsmc { basis, correction, moment_source, .. } => {
                let c = match correction {
                    Correction::Project => "project",
                    Correction::NormalFallback => "normal_fallback",
                    Correction::Discard => "discard",
                };
                let m = match moment_source {
                    MomentSource::Single => String::new(),
                    MomentSource::InnerMean { n_inner } => format!("_inner{n_inner}"),
                };
                format!("jlsmc_{}_{c}{m}", basis_tag(basis))
            }
            MethodSpec::QuantileReg { basis, inner_augment, .. } => {
                let a = if *inner_augment > 0 { format!("_aug{inner_augment}") } else { String::new() };
                format!("qr_{}{a}", basis_tag(basis))
            }
            MethodSpec::DgNormal => "dg_normal".into(),
            MethodSpec::DgCf { kurtosis: KurtosisConvention::Excess } => "dg_cf".into(),
            MethodSpec::DgCf { kurtosis: KurtosisConvention::Raw } => "dg_cf_raw".into(),
            MethodSpec::Jpp { source: PercentileSource::Inner { n_inner }, .. } => format!("jpp_inner_n{n_inner}"),
            MethodSpec::Jpp { source: PercentileSource::Pseudo { k, stride, key }, .. } => {
                format!("jpp_pseudo_k{k}_s{stride}_{}", key_tag(*key))
            }
            MethodSpec::RawPseudo { k, key } => format!("raw_pseudo_k{k}_{}", key_tag(*key)),
        }
    }

    pub fn is_nested(&self) -> bool {
        matches!(self, MethodSpec::NestedMc { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        match self {
            MethodSpec::NestedMc { n_inner } if *n_inner < 2 => bad("n_inner", format!("must be >= 2, got {n_inner}")),
            MethodSpec::Glsmc { basis } | MethodSpec::QuantileReg { basis, .. } => basis.validate(),
            MethodSpec::Jlsmc { basis, eval_points, moment_source, .. } => {
                basis.validate()?;
                if *eval_points < 2 {
                    return bad("eval_points", format!("must be >= 2, got {eval_points}"));
                }
                if let MomentSource::InnerMean { n_inner: 0 } = moment_source {
                    return bad("moment_source.n_inner", "must be >= 1".into());
                }
                Ok(())
            }
            MethodSpec::Jpp { source, z } => {
                if !(*z > 0.0 && z.is_finite()) {
                    return bad("z", format!("must be > 0, got {z}"));
                }
                match source {
                    PercentileSource::Inner { n_inner } if *n_inner < 20 => {
                        bad("source.n_inner", format!("must be >= 20, got {n_inner}"))
                    }
                    PercentileSource::Pseudo { k, .. } if *k < 20 => bad("source.k", format!("must be >= 20, got {k}")),
                    PercentileSource::Pseudo { stride: 0, .. } => bad("source.stride", "must be >= 1".into()),
                    _ => Ok(()),
                }
            }
            MethodSpec::RawPseudo { k, .. } if *k < 2 => bad("k", format!("must be >= 2, got {k}")),
            _ => Ok(()),
        }
    }
}

/// Everything needed to run fresh inner simulations at outer anchors.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub model: &'a Model,
    pub inst: &'a Instrument,
    pub outer: &'a OuterPathSet,
    pub delta: f64,
    pub rule: InclusionRule,
    pub seed: u64,
}

impl Scenario<'_> {
    pub fn cross(&self, t_index: usize) -> Result<DeltaVCross> {
        delta_v(self.outer, t_index, self.delta, self.rule)
    }
}

/// Per-path quantile and initial margin at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ImCross {
    pub t_index: usize,
    pub t: f64,
    /// Signed conditional `alpha`-quantile of the value change.
    pub quantile: Vec<f64>,
    pub per_path_im: Vec<f64>,
    pub method: MethodSpec,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl ImCross {
    pub(crate) fn from_quantiles(cross: &DeltaVCross, quantile: Vec<f64>, method: MethodSpec) -> Result<Self> {
        if let Some(p) = quantile.iter().position(|q| !q.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite quantile on path {p}")));
        }
        let per_path_im = quantile.iter().map(|q| (-q).max(0.0)).collect();
        Ok(ImCross {
            t_index: cross.t_index,
            t: cross.t,
            quantile,
            per_path_im,
            method,
            wall_time: 0.0,
            warnings: Vec::new(),
        })
    }

    pub fn mean_im(&self) -> f64 {
        self.per_path_im.iter().sum::<f64>() / self.per_path_im.len().max(1) as f64
    }
}

/// Feature values at which grid-evaluated methods are solved.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
}

impl EvalGrid {
    /// Sample quantiles of `feature` at `n` equally spaced probabilities
    /// from 0.25% to 99.75%.
    pub fn from_feature(feature: &[f64], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("grid needs >= 2 points, got {n}")));
        }
        let mut sorted = feature.to_vec();
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature must be finite".into()));
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let (lo, hi) = (0.0025, 0.9975);
        let probs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let points = probs.iter().map(|&p| sorted_quantile(&sorted, p)).collect::<Result<Vec<_>>>()?;
        Ok(EvalGrid { points, probs })
    }
}

/// Piecewise-linear interpolant through `(xs, ys)` with flat extrapolation;
/// repeated abscissae are merged by averaging their ordinates.
#[derive(Debug, Clone)]
pub(crate) struct Interpolant {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Interpolant {
    pub(crate) fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Degenerate("no points to interpolate".into()));
        }
        let mut sorted = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite abscissa"));
        let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut i = 0;
        while i < sorted.len() {
            let x = sorted[i].0;
            let mut j = i;
            let mut sum = 0.0;
            while j < sorted.len() && sorted[j].0 == x {
                sum += sorted[j].1;
                j += 1;
            }
            xs.push(x);
            ys.push(sum / (j - i) as f64);
            i = j;
        }
        Ok(Interpolant { xs, ys })
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&v| v <= x);
        let (x0, x1, y0, y1) = (self.xs[j - 1], self.xs[j], self.ys[j - 1], self.ys[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Runs `method` on the cross-section at `t_index`, timing the estimation
/// stage only.
pub fn estimate(scn: &Scenario, cross: &DeltaVCross, method: &MethodSpec, alpha: f64) -> Result<ImCross> {
    method.validate()?;
    check_alpha(alpha)?;
    let start = Instant::now();
    let mut out = match method {
        MethodSpec::NestedMc { n_inner } => nested_mc(scn, cross.t_index, *n_inner, alpha),
        MethodSpec::Glsmc { basis } => glsmc(cross, *basis, alpha),
        MethodSpec::Jlsmc { basis, eval_points, correction, moment_source } => {
            let feature = basis.feature.values(cross);
            let grid = EvalGrid::from_feature(feature, *eval_points)?;
            jlsmc(cross, *basis, &grid, *correction, alpha, *moment_source, Some(scn))
        }
        MethodSpec::QuantileReg { basis, inner_augment, steps, learn_rate, smoothing } => {
            let opts = QuantileOptions { smoothing: *smoothing, steps: *steps, learn_rate: *learn_rate };
            quantile_reg_estimator(cross, *basis, alpha, *inner_augment, &opts, Some(scn))
        }
        MethodSpec::DgNormal => delta_gamma_cross(scn, cross, alpha, None),
        MethodSpec::DgCf { kurtosis } => delta_gamma_cross(scn, cross, alpha, Some(*kurtosis)),
        MethodSpec::Jpp { source, z } => johnson_percentile_estimator(cross, *source, *z, alpha, Some(scn)),
        MethodSpec::RawPseudo { k, key } => raw_pseudo(cross, *k, *key, alpha),
    }
    .map_err(|e| Error::AtTime { t: cross.t, source: Box::new(e) })?;
    out.method = method.clone();
    out.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}

#[cfg(test)]
pub(crate) mod testutil {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use crate::simulation::DeltaVCross;

    /// Cross-section with feature `x ~ U(lo, hi)` and `dv = f(x, eps)`.
    pub fn synthetic(n: usize, seed: u64, lo: f64, hi: f64, f: impl Fn(f64, f64) -> f64) -> DeltaVCross {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(lo..hi)).collect();
        let dv: Vec<f64> = x.iter().map(|&xi| f(xi, r.sample(StandardNormal))).collect();
        DeltaVCross { t_index: 0, t: 0.0, delta: 0.05, v: x.clone(), x, dv }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_json_defaults_and_ids() {
        let m: MethodSpec = serde_json::from_str(r#"{"method":"jlsmc"}"#).unwrap();
        assert_eq!(m.id(), "jlsmc_lag7_x_project");
        let m: MethodSpec = serde_json::from_str(r#"{"method":"jpp"}"#).unwrap();
        assert_eq!(m.id(), "jpp_pseudo_k200_s10_x");
        let m: MethodSpec =
            serde_json::from_str(r#"{"method":"glsmc","basis":{"kind":"laguerre","degree":7,"feature":"v"}}"#).unwrap();
        assert_eq!(m.id(), "glsmc_lag7_v");
        assert!(serde_json::from_str::<MethodSpec>(r#"{"method":"glsmc","degre":3}"#).is_err());
        let back: MethodSpec = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(MethodSpec::RawPseudo { k: 1, key: Key::ByX }.validate().is_err());
    }

    #[test]
    fn grid_spans_the_body_and_tails() {
        let f: Vec<f64> = (0..=1000).map(|i| i as f64).collect();
        let g = EvalGrid::from_feature(&f, 200).unwrap();
        assert_eq!(g.points.len(), 200);
        assert!((g.points[0] - 2.5).abs() < 1e-9 && (g.points[199] - 997.5).abs() < 1e-9);
        assert!(g.points.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn interpolant_flat_outside_and_merges_ties() {
        let it = Interpolant::new(&[(1.0, 10.0), (0.0, 0.0), (1.0, 20.0), (2.0, 0.0)]).unwrap();
        assert_eq!(it.eval(-5.0), 0.0);
        assert_eq!(it.eval(1.0), 15.0);
        assert_eq!(it.eval(0.5), 7.5);
        assert_eq!(it.eval(9.0), 0.0);
    }
}
