use rayon::prelude::*;

use super::{check_alpha, Correction, EvalGrid, ImCross, Interpolant, MethodSpec, MomentSource, Scenario};
use crate::error::{Error, Result};
use crate::johnson::{central_from_raw, fit_moments_default, project_beta, BetaCheck, JohnsonParams};
use crate::regression::{BasisSpec, Design};
use crate::scalar::norm_inv;
use crate::simulation::{substream, Anchor, DeltaVCross, InnerEngine, Purpose};

/// Kurtosis margin added above `beta2 = beta1 + 1` after projection; the
/// boundary itself is a two-point law with no Johnson representative.
const PROJECT_MARGIN: f64 = 1e-2;

/// Share of paths with a non-positive regressed variance above which a
/// warning is attached.
const VAR_WARN_SHARE: f64 = 0.01;

/// Gaussian quantile from regressed first and second raw moments.
pub fn glsmc(cross: &DeltaVCross, basis: BasisSpec, alpha: f64) -> Result<ImCross> {
    check_alpha(alpha)?;
    let feature = basis.feature.values(cross);
    let design = Design::new(feature, basis.standardized_for(feature))?;
    let sq: Vec<f64> = cross.dv.iter().map(|d| d * d).collect();
    let m1 = design.fit(&cross.dv)?;
    let m2 = design.fit(&sq)?;
    let z = norm_inv(alpha);
    let mut floored = 0usize;
    let q: Vec<f64> = feature
        .iter()
        .map(|&f| {
            let mean = m1.predict(f);
            let var = m2.predict(f) - mean * mean;
            if var <= 0.0 {
                floored += 1;
            }
            mean + z * var.max(0.0).sqrt()
        })
        .collect();
    let mut out = ImCross::from_quantiles(cross, q, MethodSpec::Glsmc { basis })?;
    if floored as f64 > VAR_WARN_SHARE * cross.len() as f64 {
        out.warnings.push(format!("t={}: variance floored on {floored} of {} paths", cross.t, cross.len()));
    }
    Ok(out)
}

/// Regression targets: powers of `dv`, or per-path inner averages of them.
fn moment_targets(cross: &DeltaVCross, source: MomentSource, scn: Option<&Scenario>) -> Result<[Vec<f64>; 4]> {
    let per_path: Vec<[f64; 4]> = match source {
        MomentSource::Single => cross.dv.iter().map(|&d| [d, d * d, d * d * d, d * d * d * d]).collect(),
        MomentSource::InnerMean { n_inner } => {
            let scn = scn.ok_or_else(|| Error::Unsupported("inner-mean moments need a simulation scenario".into()))?;
            let engine = InnerEngine::new(scn.model, scn.inst, cross.t, scn.delta, scn.rule)?;
            (0..cross.len())
                .into_par_iter()
                .map(|p| {
                    let anchor = Anchor::from_outer(scn.outer, cross.t_index, p);
                    let mut rng = substream(scn.seed, Purpose::MomentInner, cross.t_index, p as u64);
                    let dv = engine.sample(&anchor, n_inner, &mut rng)?;
                    let mut m = [0.0; 4];
                    for d in dv {
                        let mut pw = 1.0;
                        for mk in m.iter_mut() {
                            pw *= d;
                            *mk += pw;
                        }
                    }
                    Ok(m.map(|s| s / n_inner as f64))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok([0, 1, 2, 3].map(|k| per_path.iter().map(|m| m[k]).collect()))
}

/// Quantile at one grid point, or `None` when the point is discarded.
fn point_quantile(raw: [f64; 4], correction: Correction, alpha: f64, corrected: &mut usize) -> Result<Option<f64>> {
    let ms = match central_from_raw(raw[0], raw[1], raw[2], raw[3]) {
        Ok(ms) => ms,
        Err(Error::Degenerate(_)) => return Ok(Some(raw[0])),
        Err(e) => return Err(e),
    };
    if ms.check() == BetaCheck::Valid {
        if let Ok(p) = fit_moments_default(&ms) {
            return p.quantile(alpha).map(Some);
        }
    }
    *corrected += 1;
    let normal = JohnsonParams::normal(ms.mean(), ms.sd());
    match correction {
        Correction::Discard => Ok(None),
        Correction::NormalFallback => normal.quantile(alpha).map(Some),
        Correction::Project => {
            let (b1, b2) = project_beta(ms.beta1, ms.beta2.min(ms.beta1 + 1.0));
            let fit = fit_moments_default(&ms.with_beta(b1, b2 + PROJECT_MARGIN)).unwrap_or(normal);
            fit.quantile(alpha).map(Some)
        }
    }
}

/// Johnson quantile from regressed first four raw moments, solved on the
/// evaluation grid and interpolated to every path.
pub fn jlsmc(
    cross: &DeltaVCross,
    basis: BasisSpec,
    grid: &EvalGrid,
    correction: Correction,
    alpha: f64,
    source: MomentSource,
    scn: Option<&Scenario>,
) -> Result<ImCross> {
    check_alpha(alpha)?;
    let feature = basis.feature.values(cross);
    let design = Design::new(feature, basis.standardized_for(feature))?;
    let targets = moment_targets(cross, source, scn)?;
    let fits = targets.iter().map(|y| design.fit(y)).collect::<Result<Vec<_>>>()?;
    let mut corrected = 0usize;
    let mut pairs = Vec::with_capacity(grid.points.len());
    for &g in &grid.points {
        let raw = [0, 1, 2, 3].map(|k| fits[k].predict(g));
        if let Some(q) = point_quantile(raw, correction, alpha, &mut corrected)? {
            pairs.push((g, q));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Degenerate(format!("all {} grid points discarded", grid.points.len())));
    }
    let interp = Interpolant::new(&pairs)?;
    let q = feature.iter().map(|&f| interp.eval(f)).collect();
    let method = MethodSpec::Jlsmc { basis, eval_points: grid.points.len(), correction, moment_source: source };
    let mut out = ImCross::from_quantiles(cross, q, method)?;
    if corrected > 0 {
        out.warnings.push(format!("t={}: {corrected} of {} grid points corrected", cross.t, grid.points.len()));
    }
    Ok(out)
}
