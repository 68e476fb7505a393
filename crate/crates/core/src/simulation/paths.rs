use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{substream, Purpose};
use crate::error::{Error, Result};
use crate::models::{portfolio_value, DriverState, Instrument, Model, OptionPricer};

pub(crate) const GRID_EPS: f64 = 1e-9;

/// Outer scenarios on a time grid. Values, deflators and cashflow amounts
/// are all expressed in time-0 money (multiplied by the pathwise deflator).
#[derive(Debug, Clone, PartialEq)]
pub struct OuterPathSet {
    pub times: Vec<f64>,
    pub n_outer: usize,
    pub seed: u64,
    /// Row-major `[path][time]`.
    pub states: Vec<f64>,
    pub values: Vec<f64>,
    pub deflators: Vec<f64>,
    /// Per path, ascending `(time, deflated amount)`.
    pub cashflow_events: Vec<Vec<(f64, f64)>>,
}

impl OuterPathSet {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    #[inline]
    fn at(&self, path: usize, t_index: usize) -> usize {
        path * self.times.len() + t_index
    }

    #[inline]
    pub fn state(&self, path: usize, t_index: usize) -> f64 {
        self.states[self.at(path, t_index)]
    }

    #[inline]
    pub fn value(&self, path: usize, t_index: usize) -> f64 {
        self.values[self.at(path, t_index)]
    }

    #[inline]
    pub fn deflator(&self, path: usize, t_index: usize) -> f64 {
        self.deflators[self.at(path, t_index)]
    }

    /// Grid index of `t`, if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|s| (s - t).abs() <= GRID_EPS * (1.0 + t.abs()))
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.n_outer * self.times.len();
        if self.times.is_empty() || self.n_outer == 0 {
            return Err(Error::InvalidInput("path set is empty".into()));
        }
        if self.states.len() != cells || self.values.len() != cells || self.deflators.len() != cells {
            return Err(Error::InvalidInput("path matrices do not share the [n_outer x n_times] shape".into()));
        }
        if self.cashflow_events.len() != self.n_outer {
            return Err(Error::InvalidInput("one cashflow list per path required".into()));
        }
        check_grid(&self.times)
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput("time grid must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Grid `0, delta, 2 delta, ..., maturity`; every interior point has its
/// margin-period end on the grid.
pub fn mpor_grid(maturity: f64, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && maturity > 0.0) {
        return Err(Error::InvalidInput(format!("need maturity > 0 and delta > 0, got {maturity}, {delta}")));
    }
    let steps = (maturity / delta).round();
    if (steps * delta - maturity).abs() > 1e-9 * maturity.max(1.0) {
        return Err(Error::InvalidInput(format!("maturity {maturity} is not a multiple of delta {delta}")));
    }
    Ok((0..=steps as usize).map(|k| k as f64 * delta).collect())
}

/// Sorted union of the output grid, time zero, and payment dates inside it.
pub(crate) fn simulation_grid(inst: &Instrument, times: &[f64]) -> Vec<f64> {
    let last = *times.last().expect("non-empty grid");
    let mut grid: Vec<f64> = std::iter::once(0.0).chain(times.iter().copied()).collect();
    grid.extend(inst.flow_dates().into_iter().filter(|d| *d <= last + GRID_EPS));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= GRID_EPS);
    grid
}

pub(crate) fn draw_normals<R: Rng>(model: &Model, rng: &mut R) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2 = match model {
        Model::Gbm(_) => 0.0,
        Model::G1pp(_) => rng.sample(StandardNormal),
    };
    (z1, z2)
}

/// Values the instrument along a path; options go through the hoisted
/// pricer, one per grid time.
pub(crate) struct Valuer<'a> {
    model: &'a Model,
    inst: &'a Instrument,
    pricers: Vec<Option<OptionPricer>>,
}

impl<'a> Valuer<'a> {
    pub(crate) fn new(model: &'a Model, inst: &'a Instrument, times: &[f64]) -> Result<Self> {
        let pricers = match inst {
            Instrument::IrSwap { .. } => vec![None; times.len()],
            _ => times.iter().map(|&t| OptionPricer::new(model, inst, t).map(Some)).collect::<Result<_>>()?,
        };
        Ok(Valuer { model, inst, pricers })
    }

    #[inline]
    pub(crate) fn value(&self, slot: usize, t: f64, state: f64) -> Result<f64> {
        match &self.pricers[slot] {
            Some(p) => Ok(p.value(state)),
            None => portfolio_value(self.model, self.inst, t, state),
        }
    }
}

/// Exact-transition outer simulation; deterministic in `(seed, path index)`.
pub fn simulate_outer(
    model: &Model,
    inst: &Instrument,
    n_outer: usize,
    times: &[f64],
    seed: u64,
) -> Result<OuterPathSet> {
    model.validate()?;
    inst.validate()?;
    check_grid(times)?;
    if n_outer == 0 {
        return Err(Error::InvalidInput("n_outer must be >= 1".into()));
    }
    let mat = inst.maturity();
    if *times.last().expect("checked") > mat + GRID_EPS {
        return Err(Error::TimeOutOfRange { t: *times.last().unwrap(), start: 0.0, end: mat });
    }
    // validates model/instrument pairing up front
    portfolio_value(model, inst, times[0], model.initial_state())?;

    let grid = simulation_grid(inst, times);
    let flow_dates = inst.flow_dates();
    let is_output: Vec<Option<usize>> =
        grid.iter().map(|g| times.iter().position(|t| (t - g).abs() <= GRID_EPS)).collect();
    let is_flow: Vec<bool> = grid.iter().map(|g| flow_dates.iter().any(|d| (d - g).abs() <= GRID_EPS)).collect();
    let valuer = Valuer::new(model, inst, times)?;
    let n_t = times.len();

    let per_path: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<(f64, f64)>)>> = (0..n_outer)
        .into_par_iter()
        .map(|path| {
            let mut rng = substream(seed, Purpose::Outer, 0, path as u64);
            let mut st = DriverState { x: model.initial_state(), log_deflator: 0.0 };
            let mut states = vec![0.0; n_t];
            let mut values = vec![0.0; n_t];
            let mut defl = vec![0.0; n_t];
            let mut events = Vec::new();
            let mut flows = Vec::new();
            for (g, &t) in grid.iter().enumerate() {
                if g > 0 {
                    let (z1, z2) = draw_normals(model, &mut rng);
                    model.step(grid[g - 1], t - grid[g - 1], &mut st, z1, z2);
                }
                let d = st.log_deflator.exp();
                if let Some(k) = is_output[g] {
                    states[k] = st.x;
                    defl[k] = d;
                    values[k] = d * valuer.value(k, t, st.x)?;
                }
                if is_flow[g] {
                    flows.clear();
                    flows.extend(crate::models::cashflows_in_window(model, inst, &[(t, st.x)], t, t + GRID_EPS * 2.0)?);
                    events.extend(flows.iter().map(|&(ti, a)| (ti, d * a)));
                }
            }
            Ok((states, values, defl, events))
        })
        .collect();

    let mut out = OuterPathSet {
        times: times.to_vec(),
        n_outer,
        seed,
        states: Vec::with_capacity(n_outer * n_t),
        values: Vec::with_capacity(n_outer * n_t),
        deflators: Vec::with_capacity(n_outer * n_t),
        cashflow_events: Vec::with_capacity(n_outer),
    };
    for r in per_path {
        let (s, v, d, e) = r?;
        out.states.extend(s);
        out.values.extend(v);
        out.deflators.extend(d);
        out.cashflow_events.push(e);
    }
    Ok(out)
}

/// Treatment of payments falling inside the margin period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InclusionRule {
    #[default]
    Full,
    None,
    PositiveOnly,
    NegativeOnly,
}

impl InclusionRule {
    #[inline]
    pub fn apply(self, amount: f64) -> f64 {
        match self {
            InclusionRule::Full => amount,
            InclusionRule::None => 0.0,
            InclusionRule::PositiveOnly => amount.max(0.0),
            InclusionRule::NegativeOnly => amount.min(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InclusionRule::Full => "full",
            InclusionRule::None => "none",
            InclusionRule::PositiveOnly => "positive_only",
            InclusionRule::NegativeOnly => "negative_only",
        }
    }
}

/// Margin-period value changes across all paths at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVCross {
    pub t_index: usize,
    pub t: f64,
    pub delta: f64,
    pub dv: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl DeltaVCross {
    pub fn len(&self) -> usize {
        self.dv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dv.is_empty()
    }
}

/// Sum of `rule`-filtered flows with `t <= t_i < t_end`.
pub(crate) fn window_flows(events: &[(f64, f64)], t: f64, t_end: f64, rule: InclusionRule) -> f64 {
    events
        .iter()
        .filter(|(ti, _)| *ti >= t - GRID_EPS && *ti < t_end - GRID_EPS)
        .map(|(_, a)| rule.apply(*a))
        .sum()
}

/// `dv = V(t + delta) + sum f(CF_i) - V(t)` per path, flows in `[t, t + delta)`.
pub fn delta_v(outer: &OuterPathSet, t_index: usize, delta: f64, rule: InclusionRule) -> Result<DeltaVCross> {
    if t_index >= outer.n_times() {
        return Err(Error::InvalidInput(format!("t_index {t_index} beyond grid of {}", outer.n_times())));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be > 0, got {delta}")));
    }
    let t = outer.times[t_index];
    let end = outer.index_of(t + delta).ok_or(Error::TimeOutOfRange {
        t: t + delta,
        start: outer.times[0],
        end: *outer.times.last().unwrap(),
    })?;
    let n = outer.n_outer;
    let mut dv = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for p in 0..n {
        let flows = window_flows(&outer.cashflow_events[p], t, t + delta, rule);
        let d = outer.value(p, end) + flows - outer.value(p, t_index);
        if !d.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite value change on path {p}")));
        }
        dv.push(d);
        x.push(outer.state(p, t_index));
        v.push(outer.value(p, t_index));
    }
    Ok(DeltaVCross { t_index, t, delta, dv, x, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{G1ppParams, GbmParams, Leg};

    fn toy_set(flow: f64) -> OuterPathSet {
        OuterPathSet {
            times: vec![0.0, 0.5, 1.0],
            n_outer: 1,
            seed: 0,
            states: vec![1.0, 1.0, 1.0],
            values: vec![0.7, 1.0, 1.2],
            deflators: vec![1.0; 3],
            cashflow_events: vec![vec![(0.7, flow)]],
        }
    }

    #[test]
    fn inclusion_rules_by_substitution() {
        let up = toy_set(0.3);
        let dv = |set: &OuterPathSet, r| delta_v(set, 1, 0.5, r).unwrap().dv[0];
        assert!((dv(&up, InclusionRule::Full) - 0.5).abs() < 1e-12);
        assert!((dv(&up, InclusionRule::None) - 0.2).abs() < 1e-12);
        let down = toy_set(-0.3);
        assert!((dv(&down, InclusionRule::PositiveOnly) - 0.2).abs() < 1e-12);
        assert!((dv(&down, InclusionRule::NegativeOnly) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn horizon_off_grid_is_an_error() {
        assert!(delta_v(&toy_set(0.1), 2, 0.5, InclusionRule::Full).is_err());
        assert!(delta_v(&toy_set(0.1), 1, 0.3, InclusionRule::Full).is_err());
    }

    #[test]
    fn empty_grid_is_an_error() {
        let m = Model::Gbm(GbmParams { spot0: 100.0, rate_dom: 0.0, rate_fgn: 0.0, sigma: 0.2 });
        let inst = Instrument::EuropeanCall { strike: 100.0, maturity: 1.0 };
        assert!(simulate_outer(&m, &inst, 10, &[], 1).is_err());
        assert!(simulate_outer(&m, &inst, 10, &[0.5, 0.2], 1).is_err());
    }

    #[test]
    fn zero_noise_paths_are_deterministic_forwards() {
        let m = Model::Gbm(GbmParams { spot0: 100.0, rate_dom: 0.05, rate_fgn: 0.01, sigma: 0.0 });
        let inst = Instrument::FxCall { strike: 90.0, maturity: 1.0 };
        let times = mpor_grid(1.0, 0.25).unwrap();
        let set = simulate_outer(&m, &inst, 4, &times, 3).unwrap();
        for p in 0..4 {
            for (k, &t) in times.iter().enumerate() {
                let fwd = 100.0 * (0.04f64 * t).exp();
                assert!((set.state(p, k) - fwd).abs() < 1e-10);
                let price = portfolio_value(&m, &inst, t, fwd).unwrap();
                assert!((set.value(p, k) - (-0.05 * t).exp() * price).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spot_martingale_under_pricing_measure() {
        let m = Model::Gbm(GbmParams { spot0: 85.0, rate_dom: 0.03, rate_fgn: 0.0, sigma: 0.1 });
        let inst = Instrument::CallCombination {
            legs: vec![Leg { quantity: 1.0, strike: 120.0 }, Leg { quantity: -2.0, strike: 150.0 }],
            maturity: 5.0,
        };
        let set = simulate_outer(&m, &inst, 100_000, &[0.0, 1.0, 2.5], 5).unwrap();
        let k = 2;
        let xs: Vec<f64> = (0..set.n_outer).map(|p| set.state(p, k) * set.deflator(p, k)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - 85.0).abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let m = Model::G1pp(G1ppParams::default());
        let inst = Instrument::amortizing_swap(0.045, 0.009, 15.0, 36.2, 63.2);
        let times = mpor_grid(15.0, 0.5).unwrap();
        let a = simulate_outer(&m, &inst, 50, &times, 9).unwrap();
        let b = simulate_outer(&m, &inst, 50, &times, 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_outer(&m, &inst, 50, &times, 10).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let m = Model::Gbm(GbmParams { spot0: 100.0, rate_dom: 0.08, rate_fgn: 0.02, sigma: 0.3 });
        let inst = Instrument::FxCall { strike: 105.0, maturity: 1.0 };
        let times = mpor_grid(1.0, 0.04).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_outer(&m, &inst, 300, &times, 1).unwrap());
        let b = four.install(|| simulate_outer(&m, &inst, 300, &times, 1).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn terminal_value_is_payoff() {
        let m = Model::Gbm(GbmParams { spot0: 100.0, rate_dom: 0.08, rate_fgn: 0.02, sigma: 0.3 });
        let inst = Instrument::FxCall { strike: 105.0, maturity: 1.0 };
        let times = mpor_grid(1.0, 0.04).unwrap();
        let set = simulate_outer(&m, &inst, 200, &times, 2).unwrap();
        let last = times.len() - 1;
        for p in 0..200 {
            let payoff = (set.state(p, last) - 105.0).max(0.0) * set.deflator(p, last);
            assert!((set.value(p, last) - payoff).abs() < 1e-9);
        }
    }

    /// Removing window flows shifts every path's change by exactly the
    /// signed flow sum.
    #[test]
    fn rule_difference_is_window_flow_sum() {
        let m = Model::G1pp(G1ppParams::default());
        let inst = Instrument::amortizing_swap(0.045, 0.009, 15.0, 36.2, 63.2);
        let times = mpor_grid(15.0, 0.04).unwrap();
        let set = simulate_outer(&m, &inst, 40, &times, 4).unwrap();
        let k = set.index_of(0.24).unwrap();
        let full = delta_v(&set, k, 0.04, InclusionRule::Full).unwrap();
        let none = delta_v(&set, k, 0.04, InclusionRule::None).unwrap();
        for p in 0..40 {
            let flows = window_flows(&set.cashflow_events[p], 0.24, 0.28, InclusionRule::Full);
            assert!(flows.abs() > 0.0);
            assert!((full.dv[p] - none.dv[p] - flows).abs() < 1e-12);
        }
    }

    /// Deflated swap value plus realised deflated flows is a martingale.
    #[test]
    fn swap_value_plus_flows_is_martingale() {
        let m = Model::G1pp(G1ppParams::default());
        let inst = Instrument::amortizing_swap(0.045, 0.009, 15.0, 36.2, 63.2);
        let times = vec![0.0, 4.1, 9.3];
        let set = simulate_outer(&m, &inst, 10_000, &times, 21).unwrap();
        for k in 1..times.len() {
            let xs: Vec<f64> = (0..set.n_outer)
                .map(|p| {
                    set.value(p, k) + window_flows(&set.cashflow_events[p], 0.0, times[k], InclusionRule::Full)
                        - set.value(p, 0)
                })
                .collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!(mean.abs() < 3.0 * sd / n.sqrt(), "t={} mean {mean} se {}", times[k], sd / n.sqrt());
        }
    }

    #[test]
    fn mpor_grid_alignment() {
        let g = mpor_grid(1.0, 0.04).unwrap();
        assert_eq!(g.len(), 26);
        assert!(mpor_grid(1.0, 0.3).is_err());
        assert_eq!(mpor_grid(15.0, 0.04).unwrap().len(), 376);
    }
}
