use rayon::prelude::*;

use super::{check_alpha, ImCross, MethodSpec, Scenario};
use crate::error::{Error, Result};
use crate::regression::{BasisSpec, Design, QuantileOptions};
use crate::simulation::{substream, Anchor, DeltaVCross, InnerEngine, Purpose};

/// Pinball-loss regression of `dv` on the feature, optionally trained on
/// `inner_augment` extra inner samples per path.
pub fn quantile_reg_estimator(
    cross: &DeltaVCross,
    basis: BasisSpec,
    alpha: f64,
    inner_augment: usize,
    opts: &QuantileOptions,
    scn: Option<&Scenario>,
) -> Result<ImCross> {
    check_alpha(alpha)?;
    let feature = basis.feature.values(cross);
    let mut x = feature.to_vec();
    let mut y = cross.dv.clone();
    if inner_augment > 0 {
        let scn = scn.ok_or_else(|| Error::Unsupported("inner augmentation needs a simulation scenario".into()))?;
        let engine = InnerEngine::new(scn.model, scn.inst, cross.t, scn.delta, scn.rule)?;
        let extra = (0..cross.len())
            .into_par_iter()
            .map(|p| {
                let anchor = Anchor::from_outer(scn.outer, cross.t_index, p);
                let mut rng = substream(scn.seed, Purpose::QuantileAugment, cross.t_index, p as u64);
                engine.sample(&anchor, inner_augment, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        for (p, dv) in extra.into_iter().enumerate() {
            x.extend(std::iter::repeat(feature[p]).take(dv.len()));
            y.extend(dv);
        }
    }
    let design = Design::new(&x, basis.standardized_for(feature))?;
    let model = design.fit_quantile(&y, alpha, opts)?;
    let q = feature.iter().map(|&f| model.predict(f)).collect();
    let method = MethodSpec::QuantileReg {
        basis,
        inner_augment,
        steps: opts.steps,
        learn_rate: opts.learn_rate,
        smoothing: opts.smoothing,
    };
    ImCross::from_quantiles(cross, q, method)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::synthetic;
    use super::*;
    use crate::scalar::norm_inv;

    #[test]
    fn independent_noise_gives_a_flat_curve() {
        let cross = synthetic(50_000, 11, 0.0, 1.0, |_, e| 1.0 + 0.5 * e);
        let im = quantile_reg_estimator(&cross, BasisSpec::laguerre(2), 0.01, 0, &QuantileOptions::default(), None).unwrap();
        let want = 1.0 + 0.5 * norm_inv(0.01);
        // quantile SE: sqrt(a (1 - a) / n) / density, widened for the slope terms
        let se = (0.01f64 * 0.99 / 5e4).sqrt() / (crate::scalar::norm_pdf(norm_inv(0.01f64)) / 0.5);
        let (lo, hi) = im.quantile.iter().fold((f64::MAX, f64::MIN), |(a, b), q| (a.min(*q), b.max(*q)));
        assert!((lo - want).abs() < 6.0 * se && (hi - want).abs() < 6.0 * se, "[{lo}, {hi}] vs {want}, se {se}");
    }

    #[test]
    fn heteroskedastic_scale() {
        let cross = synthetic(50_000, 12, 1.0, 3.0, |x, e| x * e);
        let im = quantile_reg_estimator(&cross, BasisSpec::laguerre(3), 0.01, 0, &QuantileOptions::default(), None).unwrap();
        let z = norm_inv(0.01f64);
        for (x, q) in cross.x.iter().zip(&im.quantile) {
            if *x > 1.2 && *x < 2.8 {
                assert!(((q - x * z) / (x * z)).abs() < 0.05, "x={x} q={q}");
            }
        }
    }

    #[test]
    fn augmentation_requires_a_scenario() {
        let cross = synthetic(100, 13, 0.0, 1.0, |_, e| e);
        assert!(quantile_reg_estimator(&cross, BasisSpec::laguerre(2), 0.01, 3, &QuantileOptions::default(), None).is_err());
    }
}
