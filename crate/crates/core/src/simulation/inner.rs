use rand::Rng;
use serde::{Deserialize, Serialize};

use super::paths::{draw_normals, DeltaVCross, InclusionRule, OuterPathSet, GRID_EPS};
use super::rng::{substream, Purpose};
use crate::error::{Error, Result};
use crate::models::{cashflows_in_window, portfolio_value, DriverState, Instrument, Model, OptionPricer};

/// Conditioning point of an inner simulation. `value` is in the same
/// deflated units as the outer set; `deflator` converts time-`t` money.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub t_index: usize,
    pub path: usize,
    pub t: f64,
    pub state: f64,
    pub value: f64,
    pub deflator: f64,
}

impl Anchor {
    /// Anchor taken from an outer path.
    pub fn from_outer(outer: &OuterPathSet, t_index: usize, path: usize) -> Self {
        Anchor {
            t_index,
            path,
            t: outer.times[t_index],
            state: outer.state(path, t_index),
            value: outer.value(path, t_index),
            deflator: outer.deflator(path, t_index),
        }
    }

    /// Free-standing anchor in time-`t` money (unit deflator).
    pub fn standalone(model: &Model, inst: &Instrument, t: f64, state: f64) -> Result<Self> {
        Ok(Anchor { t_index: 0, path: 0, t, state, value: portfolio_value(model, inst, t, state)?, deflator: 1.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Nested,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSampleSet {
    pub anchor: Anchor,
    pub dv: Vec<f64>,
    pub origin: Origin,
}

/// Reusable margin-period simulator for one `(t, delta, rule)`; the grid and
/// the horizon pricer are built once and shared by every anchor.
pub struct InnerEngine<'a> {
    model: &'a Model,
    inst: &'a Instrument,
    rule: InclusionRule,
    grid: Vec<f64>,
    is_flow: Vec<bool>,
    horizon: Option<OptionPricer>,
}

impl<'a> InnerEngine<'a> {
    pub fn new(model: &'a Model, inst: &'a Instrument, t: f64, delta: f64, rule: InclusionRule) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("delta must be > 0, got {delta}")));
        }
        let end = t + delta;
        let mat = inst.maturity();
        if t < 0.0 || end > mat + GRID_EPS {
            return Err(Error::TimeOutOfRange { t: end, start: 0.0, end: mat });
        }
        let end = end.min(mat);
        let flows: Vec<f64> =
            inst.flow_dates().into_iter().filter(|d| *d > t + GRID_EPS && *d < end - GRID_EPS).collect();
        let mut grid = vec![t];
        grid.extend(&flows);
        grid.push(end);
        let mut is_flow = vec![false; grid.len()];
        for f in is_flow.iter_mut().take(grid.len() - 1).skip(1) {
            *f = true;
        }
        // a flow exactly at t is paid at the start of the window
        let flow_at_start = inst.flow_dates().iter().any(|d| (d - t).abs() <= GRID_EPS);
        is_flow[0] = flow_at_start;
        let horizon = match inst {
            Instrument::IrSwap { .. } => None,
            _ => Some(OptionPricer::new(model, inst, end)?),
        };
        Ok(InnerEngine { model, inst, rule, grid, is_flow, horizon })
    }

    pub fn t(&self) -> f64 {
        self.grid[0]
    }

    /// `n` value changes conditional on `anchor`, in the anchor's units.
    pub fn sample<R: Rng>(&self, anchor: &Anchor, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut events = Vec::new();
        let last = self.grid.len() - 1;
        for _ in 0..n {
            let mut st = DriverState { x: anchor.state, log_deflator: 0.0 };
            let mut flows = 0.0;
            for g in 0..=last {
                if g > 0 {
                    let (z1, z2) = draw_normals(self.model, rng);
                    self.model.step(self.grid[g - 1], self.grid[g] - self.grid[g - 1], &mut st, z1, z2);
                }
                if self.is_flow[g] {
                    let tg = self.grid[g];
                    events.clear();
                    events.extend(cashflows_in_window(self.model, self.inst, &[(tg, st.x)], tg, tg + 2.0 * GRID_EPS)?);
                    let d = st.log_deflator.exp();
                    flows += events.iter().map(|&(_, a)| self.rule.apply(a)).sum::<f64>() * d;
                }
            }
            let end_value = match &self.horizon {
                Some(p) => p.value(st.x),
                None => portfolio_value(self.model, self.inst, self.grid[last], st.x)?,
            };
            let dv = anchor.deflator * (st.log_deflator.exp() * end_value + flows) - anchor.value;
            out.push(dv);
        }
        Ok(out)
    }
}

/// `n_inner` value changes over `[t, t + delta]` starting at the anchor,
/// drawn from the substream keyed by the anchor's time and path indices.
pub fn simulate_inner(
    model: &Model,
    inst: &Instrument,
    anchor: &Anchor,
    n_inner: usize,
    delta: f64,
    rule: InclusionRule,
    seed: u64,
) -> Result<InnerSampleSet> {
    if n_inner < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_inner });
    }
    let engine = InnerEngine::new(model, inst, anchor.t, delta, rule)?;
    let mut rng = substream(seed, Purpose::NestedInner, anchor.t_index, anchor.path as u64);
    let dv = engine.sample(anchor, n_inner, &mut rng)?;
    Ok(InnerSampleSet { anchor: *anchor, dv, origin: Origin::Nested })
}

/// Conditioning key for pseudo-inner neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Key {
    #[default]
    #[serde(rename = "x", alias = "X")]
    ByX,
    #[serde(rename = "v", alias = "V")]
    ByV,
}

impl Key {
    pub fn values<'c>(self, cross: &'c DeltaVCross) -> &'c [f64] {
        match self {
            Key::ByX => &cross.x,
            Key::ByV => &cross.v,
        }
    }
}

/// Paths sorted by `(key, path index)`, for repeated nearest-neighbour
/// queries against one cross-section.
#[derive(Debug, Clone)]
pub struct KeyIndex {
    /// Path indices in key order.
    pub order: Vec<usize>,
    /// Sorted keys.
    pub keys: Vec<f64>,
    /// Position of each path in `order`.
    pub rank: Vec<usize>,
}

impl KeyIndex {
    pub fn new(keys: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..keys.len()).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
        let mut rank = vec![0; keys.len()];
        for (pos, &p) in order.iter().enumerate() {
            rank[p] = pos;
        }
        let keys = order.iter().map(|&p| keys[p]).collect();
        KeyIndex { order, keys, rank }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The `k` paths nearest (in key, then path index) to the path at sorted
    /// position `pos`, as path indices in key order.
    pub fn neighbours(&self, pos: usize, k: usize) -> Vec<usize> {
        let n = self.len();
        let a = self.keys[pos];
        let (mut lo, mut hi) = (pos, pos + 1);
        while hi - lo < k {
            let take_left = match (lo > 0, hi < n) {
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
                (true, true) => {
                    let dl = a - self.keys[lo - 1];
                    let dr = self.keys[hi] - a;
                    dl < dr || (dl == dr && self.order[lo - 1] < self.order[hi])
                }
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        // Within a run of equal keys cut by the window, the lowest path
        // indices win; runs are path-sorted so that is the run's prefix.
        let run = |p: usize| {
            let v = self.keys[p];
            let s = self.keys[..p].iter().rposition(|&x| x != v).map_or(0, |i| i + 1);
            let e = self.keys[p..].iter().position(|&x| x != v).map_or(n, |i| p + i);
            (s, e)
        };
        let (ls, le) = run(lo);
        let (rs, _) = run(hi - 1);
        let mut out = Vec::with_capacity(hi - lo);
        if ls == rs {
            out.extend(&self.order[ls..ls + (hi - lo)]);
            return out;
        }
        let left_taken = le - lo;
        out.extend(&self.order[ls..ls + left_taken]);
        out.extend(&self.order[le..rs]);
        let right_taken = hi - rs;
        out.extend(&self.order[rs..rs + right_taken]);
        out
    }
}

/// Value changes of the `k` outer paths whose key is nearest the anchor
/// path's key (ties by path index); the anchor itself is included.
pub fn pseudo_inner(cross: &DeltaVCross, anchor_index: usize, key: Key, k: usize) -> Result<InnerSampleSet> {
    let index = KeyIndex::new(key.values(cross));
    pseudo_inner_indexed(cross, &index, anchor_index, k)
}

/// [`pseudo_inner`] against a prebuilt index.
pub fn pseudo_inner_indexed(
    cross: &DeltaVCross,
    index: &KeyIndex,
    anchor_index: usize,
    k: usize,
) -> Result<InnerSampleSet> {
    let n = cross.len();
    if index.len() != n {
        return Err(Error::InvalidInput("key index does not match the cross-section".into()));
    }
    if k < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: k });
    }
    if k > n {
        return Err(Error::InsufficientSamples { needed: k, got: n });
    }
    if anchor_index >= n {
        return Err(Error::InvalidInput(format!("anchor {anchor_index} out of {n} paths")));
    }
    let members = index.neighbours(index.rank[anchor_index], k);
    let anchor = Anchor {
        t_index: cross.t_index,
        path: anchor_index,
        t: cross.t,
        state: cross.x[anchor_index],
        value: cross.v[anchor_index],
        deflator: f64::NAN,
    };
    Ok(InnerSampleSet { anchor, dv: members.iter().map(|&p| cross.dv[p]).collect(), origin: Origin::Pseudo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bs_price, GbmParams, G1ppParams};
    use crate::scalar::norm_inv;
    use crate::simulation::{empirical_quantile, mpor_grid, simulate_outer};

    fn cross_from(x: Vec<f64>, dv: Vec<f64>) -> DeltaVCross {
        DeltaVCross { t_index: 0, t: 0.0, delta: 0.1, v: x.clone(), x, dv }
    }

    #[test]
    fn zero_vol_inner_is_deterministic() {
        let m = Model::Gbm(GbmParams { spot0: 100.0, rate_dom: 0.05, rate_fgn: 0.0, sigma: 0.0 });
        let inst = Instrument::EuropeanCall { strike: 90.0, maturity: 1.0 };
        let a = Anchor::standalone(&m, &inst, 0.2, 100.0).unwrap();
        let s = simulate_inner(&m, &inst, &a, 10, 0.1, InclusionRule::Full, 1).unwrap();
        let s_end = 100.0 * (0.05f64 * 0.1).exp();
        let expect = (-0.05f64 * 0.1).exp() * portfolio_value(&m, &inst, 0.3, s_end).unwrap() - a.value;
        for d in &s.dv {
            assert!((d - expect).abs() < 1e-12);
        }
        assert_eq!(s.origin, Origin::Nested);
    }

    #[test]
    fn too_few_inner_samples() {
        let m = Model::Gbm(GbmParams { spot0: 100.0, rate_dom: 0.05, rate_fgn: 0.0, sigma: 0.2 });
        let inst = Instrument::EuropeanCall { strike: 90.0, maturity: 1.0 };
        let a = Anchor::standalone(&m, &inst, 0.2, 100.0).unwrap();
        assert!(simulate_inner(&m, &inst, &a, 1, 0.1, InclusionRule::Full, 1).is_err());
        assert!(simulate_inner(&m, &inst, &a, 10, 0.9, InclusionRule::Full, 1).is_err());
    }

    #[test]
    fn single_call_inner_quantile_matches_monotone_map() {
        let (r, sig, k, t, d, s) = (0.03, 0.1, 120.0, 0.5, 0.05, 95.0);
        let m = Model::Gbm(GbmParams { spot0: 85.0, rate_dom: r, rate_fgn: 0.0, sigma: sig });
        let inst = Instrument::EuropeanCall { strike: k, maturity: 5.0 };
        let a = Anchor::standalone(&m, &inst, t, s).unwrap();
        let set = simulate_inner(&m, &inst, &a, 200_000, d, InclusionRule::Full, 4).unwrap();
        let q = empirical_quantile(&set.dv, 0.01).unwrap();
        let s_q = s * ((r - 0.5 * sig * sig) * d + sig * d.sqrt() * norm_inv(0.01)).exp();
        let oracle = (-r * d).exp() * bs_price(s_q, k, r, 0.0, sig, 5.0 - t - d).unwrap()
            - bs_price(s, k, r, 0.0, sig, 5.0 - t).unwrap();
        assert!(((q - oracle) / oracle).abs() < 0.01, "{q} vs {oracle}");
    }

    #[test]
    fn inner_mean_is_zero_in_deflated_units() {
        let m = Model::G1pp(G1ppParams::default());
        let inst = Instrument::amortizing_swap(0.045, 0.009, 15.0, 36.2, 63.2);
        let a = Anchor::standalone(&m, &inst, 3.2, 0.004).unwrap();
        let set = simulate_inner(&m, &inst, &a, 40_000, 0.3, InclusionRule::Full, 8).unwrap();
        let n = set.dv.len() as f64;
        let mean = set.dv.iter().sum::<f64>() / n;
        let sd = (set.dv.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 3.0 * sd / n.sqrt(), "{mean} se {}", sd / n.sqrt());
    }

    #[test]
    fn nested_anchor_reuses_outer_units() {
        let m = Model::G1pp(G1ppParams::default());
        let inst = Instrument::amortizing_swap(0.045, 0.009, 15.0, 36.2, 63.2);
        let times = mpor_grid(15.0, 0.25).unwrap();
        let outer = simulate_outer(&m, &inst, 3, &times, 2).unwrap();
        let a = Anchor::from_outer(&outer, 8, 1);
        let s1 = simulate_inner(&m, &inst, &a, 5, 0.25, InclusionRule::Full, 2).unwrap();
        let s2 = simulate_inner(&m, &inst, &a, 5, 0.25, InclusionRule::Full, 2).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.dv.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn pseudo_full_cross_and_median() {
        let x = vec![5.0, 1.0, 3.0, 4.0, 2.0];
        let dv = vec![50.0, 10.0, 30.0, 40.0, 20.0];
        let c = cross_from(x, dv);
        let mut all = pseudo_inner(&c, 0, Key::ByX, 5).unwrap().dv;
        all.sort_by(f64::total_cmp);
        assert_eq!(all, vec![10.0, 20.0, 30.0, 40.0, 50.0]);
        let mut mid = pseudo_inner(&c, 2, Key::ByX, 3).unwrap().dv;
        mid.sort_by(f64::total_cmp);
        assert_eq!(mid, vec![20.0, 30.0, 40.0]);
        assert!(pseudo_inner(&c, 2, Key::ByX, 6).is_err());
        assert!(pseudo_inner(&c, 2, Key::ByX, 1).is_err());
    }

    #[test]
    fn pseudo_ties_prefer_low_path_index() {
        let c = cross_from(vec![1.0; 6], (0..6).map(|i| i as f64).collect());
        let s = pseudo_inner(&c, 4, Key::ByX, 3).unwrap();
        assert_eq!(s.dv, vec![0.0, 1.0, 2.0]);
        let c = cross_from(vec![0.0, 1.0, 1.0, 1.0, 2.0, 9.0], (0..6).map(|i| i as f64).collect());
        let mut s = pseudo_inner(&c, 0, Key::ByX, 3).unwrap().dv;
        s.sort_by(f64::total_cmp);
        assert_eq!(s, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn pseudo_quantile_on_affine_data() {
        let n = 20_000;
        let mut rng = substream(3, Purpose::Outer, 0, 0);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dv: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = cross_from(x.clone(), dv);
        let idx = KeyIndex::new(&c.x);
        for anchor in [10, 500, 7000] {
            let s = pseudo_inner_indexed(&c, &idx, anchor, 200).unwrap();
            let q = empirical_quantile(&s.dv, 0.01).unwrap();
            let keys: Vec<f64> = s.dv.iter().map(|d| (d - 1.0) / 2.0).collect();
            let spread = keys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - keys.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((q - (2.0 * x[anchor] + 1.0)).abs() <= 2.0 * spread + 1e-12);
        }
    }
}
