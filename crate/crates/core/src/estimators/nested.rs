use rayon::prelude::*;

use super::{check_alpha, ImCross, MethodSpec, Scenario};
use crate::error::{Error, Result};
use crate::simulation::{quantile_in_place, substream, Anchor, InnerEngine, Purpose};

/// Per-path empirical quantile of `n_inner` fresh inner samples.
pub fn nested_mc(scn: &Scenario, t_index: usize, n_inner: usize, alpha: f64) -> Result<ImCross> {
    check_alpha(alpha)?;
    if n_inner < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_inner });
    }
    let cross = scn.cross(t_index)?;
    let engine = InnerEngine::new(scn.model, scn.inst, cross.t, scn.delta, scn.rule)?;
    let q = (0..scn.outer.n_outer)
        .into_par_iter()
        .map(|p| {
            let anchor = Anchor::from_outer(scn.outer, t_index, p);
            let mut rng = substream(scn.seed, Purpose::NestedInner, t_index, p as u64);
            let mut dv = engine.sample(&anchor, n_inner, &mut rng)?;
            quantile_in_place(&mut dv, alpha)
        })
        .collect::<Result<Vec<f64>>>()?;
    ImCross::from_quantiles(&cross, q, MethodSpec::NestedMc { n_inner })
}
