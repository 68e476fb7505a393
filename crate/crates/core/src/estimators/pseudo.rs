use rayon::prelude::*;

use super::{check_alpha, ImCross, Interpolant, MethodSpec, PercentileSource, Scenario};
use crate::error::{Error, Result};
use crate::johnson::{fit_percentiles_samples, JohnsonParams};
use crate::simulation::{quantile_in_place, substream, Anchor, DeltaVCross, InnerEngine, Key, KeyIndex, Purpose};

/// Percentile-matched Johnson quantile of one sample, or the normal
/// quantile with the sample mean and deviation when the spread is
/// degenerate. The flag reports the fallback.
fn percentile_quantile(samples: &[f64], z: f64, alpha: f64) -> Result<(f64, bool)> {
    match fit_percentiles_samples(samples, z) {
        Ok(p) => Ok((p.quantile(alpha)?, false)),
        Err(Error::Degenerate(_)) | Err(Error::InsufficientSamples { .. }) => {
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let q = if sd > 0.0 { JohnsonParams::normal(mean, sd).quantile(alpha)? } else { mean };
            Ok((q, true))
        }
        Err(e) => Err(e),
    }
}

/// Johnson percentile matching on fresh inner samples at every path, or on
/// pseudo-inner samples at every `stride`-th path in key order with linear
/// interpolation in the key between anchors.
pub fn johnson_percentile_estimator(
    cross: &DeltaVCross,
    source: PercentileSource,
    z: f64,
    alpha: f64,
    scn: Option<&Scenario>,
) -> Result<ImCross> {
    check_alpha(alpha)?;
    let n = cross.len();
    let (q, fallbacks): (Vec<f64>, usize) = match source {
        PercentileSource::Inner { n_inner } => {
            let scn = scn.ok_or_else(|| Error::Unsupported("inner percentile source needs a simulation scenario".into()))?;
            let engine = InnerEngine::new(scn.model, scn.inst, cross.t, scn.delta, scn.rule)?;
            let r = (0..n)
                .into_par_iter()
                .map(|p| {
                    let anchor = Anchor::from_outer(scn.outer, cross.t_index, p);
                    let mut rng = substream(scn.seed, Purpose::PercentileInner, cross.t_index, p as u64);
                    percentile_quantile(&engine.sample(&anchor, n_inner, &mut rng)?, z, alpha)
                })
                .collect::<Result<Vec<_>>>()?;
            let fb = r.iter().filter(|(_, f)| *f).count();
            (r.into_iter().map(|(q, _)| q).collect(), fb)
        }
        PercentileSource::Pseudo { k, stride, key } => {
            if k > n {
                return Err(Error::InsufficientSamples { needed: k, got: n });
            }
            let keys = key.values(cross);
            let index = KeyIndex::new(keys);
            let mut anchors: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
            if anchors.last() != Some(&(n - 1)) {
                anchors.push(n - 1);
            }
            let fits = anchors
                .par_iter()
                .map(|&pos| {
                    let dv: Vec<f64> = index.neighbours(pos, k).iter().map(|&p| cross.dv[p]).collect();
                    let (q, fb) = percentile_quantile(&dv, z, alpha)?;
                    Ok(((index.keys[pos], q), fb))
                })
                .collect::<Result<Vec<_>>>()?;
            let fb = fits.iter().filter(|(_, f)| *f).count();
            let pairs: Vec<(f64, f64)> = fits.into_iter().map(|(p, _)| p).collect();
            let interp = Interpolant::new(&pairs)?;
            (keys.iter().map(|&x| interp.eval(x)).collect(), fb)
        }
    };
    let mut out = ImCross::from_quantiles(cross, q, MethodSpec::Jpp { source, z })?;
    if fallbacks > 0 {
        out.warnings.push(format!("t={}: normal fallback at {fallbacks} degenerate anchors", cross.t));
    }
    Ok(out)
}

/// Per-path empirical quantile of the `k` key-nearest value changes.
pub fn raw_pseudo(cross: &DeltaVCross, k: usize, key: Key, alpha: f64) -> Result<ImCross> {
    check_alpha(alpha)?;
    let n = cross.len();
    if k < 2 || k > n {
        return Err(Error::InsufficientSamples { needed: k.max(2), got: n.min(k) });
    }
    let index = KeyIndex::new(key.values(cross));
    let q = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut dv: Vec<f64> = index.neighbours(index.rank[p], k).iter().map(|&i| cross.dv[i]).collect();
            quantile_in_place(&mut dv, alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    ImCross::from_quantiles(cross, q, MethodSpec::RawPseudo { k, key })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::synthetic;
    use super::*;
    use crate::scalar::{norm_inv, norm_pdf};
    use crate::simulation::empirical_quantile;

    #[test]
    fn full_neighbourhood_is_the_unconditional_quantile() {
        let cross = synthetic(500, 21, 0.0, 1.0, |x, e| x + e);
        let im = raw_pseudo(&cross, 500, Key::ByX, 0.05).unwrap();
        let q = empirical_quantile(&cross.dv, 0.05).unwrap();
        assert!(im.quantile.iter().all(|v| *v == q));
    }

    #[test]
    fn affine_conditional_quantile() {
        // dv = 2 x + e: the k-window spans about k / n of the unit feature
        // range, so the bias is at most the slope times that width
        let (n, k) = (100_000, 400);
        let cross = synthetic(n, 22, 0.0, 1.0, |x, e| 2.0 * x + 0.5 * e);
        let im = raw_pseudo(&cross, k, Key::ByX, 0.05).unwrap();
        let z = norm_inv(0.05f64);
        let se = (0.05f64 * 0.95 / k as f64).sqrt() / (norm_pdf(z) / 0.5);
        let bias = 2.0 * k as f64 / n as f64;
        let mut worst = 0.0f64;
        for (x, q) in cross.x.iter().zip(&im.quantile) {
            if *x > 0.01 && *x < 0.99 {
                worst = worst.max((q - (2.0 * x + 0.5 * z)).abs());
            }
        }
        assert!(worst < bias + 5.0 * se, "{worst}");
    }

    #[test]
    fn jpp_normal_samples_recover_the_normal_quantile() {
        let cross = synthetic(100_000, 23, 0.0, 1.0, |_, e| 0.2 + 1.5 * e);
        let source = PercentileSource::Pseudo { k: 20_000, stride: 5000, key: Key::ByX };
        let im = johnson_percentile_estimator(&cross, source, 0.524, 0.01, None).unwrap();
        let want = 0.2 + 1.5 * norm_inv(0.01f64);
        let mean = im.quantile.iter().sum::<f64>() / im.quantile.len() as f64;
        assert!((mean - want).abs() < 0.06, "{mean} vs {want}");
    }

    #[test]
    fn degenerate_anchor_falls_back_to_normal() {
        let (q, fb) = percentile_quantile(&[1.0, 1.0, 1.0, 2.0, 2.0], 0.524, 0.01).unwrap();
        assert!(fb);
        assert!(q < 1.0);
        let (q, fb) = percentile_quantile(&[3.0; 30], 0.524, 0.01).unwrap();
        assert!(fb && q == 3.0);
    }
}
