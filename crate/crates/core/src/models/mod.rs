//! Reference instruments, their driving models and closed-form valuation.
//!
//! Risk-factor state is a single number per path: the spot (or FX rate) for
//! the lognormal driver and the short-rate factor `x` for the G1++ driver.
//! Values returned here are in time-`t` money; the simulation layer applies
//! the pathwise deflator.

pub mod black_scholes;
pub mod g1pp;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
pub use black_scholes::{bs_delta_gamma, bs_price};
pub use g1pp::{g1pp_bond_price, G1ppParams};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmParams {
    pub spot0: f64,
    pub rate_dom: f64,
    #[serde(default)]
    pub rate_fgn: f64,
    pub sigma: f64,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot0 > 0.0 && self.spot0.is_finite()) {
            return Err(Error::InvalidInput(format!("spot0 must be > 0, got {}", self.spot0)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        ensure_finite("rate_dom", self.rate_dom)?;
        ensure_finite("rate_fgn", self.rate_fgn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Gbm(GbmParams),
    G1pp(G1ppParams),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Gbm(p) => p.validate(),
            Model::G1pp(p) => p.validate(),
        }
    }

    /// State at time zero.
    pub fn initial_state(&self) -> f64 {
        match self {
            Model::Gbm(p) => p.spot0,
            Model::G1pp(_) => 0.0,
        }
    }

    /// Advances `(state, log deflator)` exactly over `[t, t + h]` using two
    /// independent standard normals (`z2` is unused by the lognormal driver).
    pub fn step(&self, t: f64, h: f64, state: &mut DriverState, z1: f64, z2: f64) {
        match self {
            Model::Gbm(p) => {
                let drift = (p.rate_dom - p.rate_fgn - 0.5 * p.sigma * p.sigma) * h;
                state.x *= (drift + p.sigma * h.sqrt() * z1).exp();
                state.log_deflator -= p.rate_dom * h;
            }
            Model::G1pp(p) => {
                let (a, s) = (p.mean_reversion, p.sigma);
                let var_x = g1pp::factor_variance(a, s, h);
                let var_i = g1pp::integral_variance(a, s, h);
                let cov = g1pp::factor_integral_covariance(a, s, h);
                let sd_x = var_x.sqrt();
                let (c1, c2) = if sd_x > 0.0 {
                    let c1 = cov / sd_x;
                    (c1, (var_i - c1 * c1).max(0.0).sqrt())
                } else {
                    (0.0, var_i.sqrt())
                };
                let x = state.x;
                let integral = x * g1pp::b_factor(a, h) + c1 * z1 + c2 * z2;
                state.x = x * (-a * h).exp() + sd_x * z1;
                state.log_deflator -= integral + g1pp::shift_integral(a, s, p.flat_init_rate, t, t + h);
            }
        }
    }
}

/// Pathwise driver state: risk factor plus log of the money-market deflator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverState {
    pub x: f64,
    pub log_deflator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leg {
    pub quantity: f64,
    pub strike: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Instrument {
    EuropeanCall {
        strike: f64,
        maturity: f64,
    },
    CallCombination {
        legs: Vec<Leg>,
        maturity: f64,
    },
    FxCall {
        strike: f64,
        maturity: f64,
    },
    IrSwap {
        fixed_rate: f64,
        spread: f64,
        fixed_period: f64,
        float_period: f64,
        maturity: f64,
        /// `(year, amount)` steps; the notional of an accrual period is the
        /// entry in force at the period start.
        notional_schedule: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greeks {
    /// `dV/dS * S`
    pub delta_cash: f64,
    /// `d2V/dS2 * S^2`
    pub gamma_cash: f64,
}

impl Instrument {
    /// Swap with the notional rising linearly per year between two amounts.
    pub fn amortizing_swap(
        fixed_rate: f64,
        spread: f64,
        maturity: f64,
        first_notional: f64,
        last_notional: f64,
    ) -> Instrument {
        let years = maturity.round().max(1.0) as usize;
        let schedule = (0..years)
            .map(|y| {
                let w = if years > 1 { y as f64 / (years - 1) as f64 } else { 0.0 };
                (y as f64, first_notional + (last_notional - first_notional) * w)
            })
            .collect();
        Instrument::IrSwap {
            fixed_rate,
            spread,
            fixed_period: 1.0,
            float_period: 0.25,
            maturity,
            notional_schedule: schedule,
        }
    }

    pub fn maturity(&self) -> f64 {
        match self {
            Instrument::EuropeanCall { maturity, .. }
            | Instrument::CallCombination { maturity, .. }
            | Instrument::FxCall { maturity, .. }
            | Instrument::IrSwap { maturity, .. } => *maturity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mat = self.maturity();
        if !(mat > 0.0 && mat.is_finite()) {
            return Err(Error::InvalidInput(format!("maturity must be > 0, got {mat}")));
        }
        match self {
            Instrument::EuropeanCall { strike, .. } | Instrument::FxCall { strike, .. } => {
                if !(*strike > 0.0 && strike.is_finite()) {
                    return Err(Error::InvalidInput(format!("strike must be > 0, got {strike}")));
                }
            }
            Instrument::CallCombination { legs, .. } => {
                if legs.is_empty() {
                    return Err(Error::InvalidInput("call combination needs at least one leg".into()));
                }
                for leg in legs {
                    if !(leg.strike > 0.0 && leg.strike.is_finite()) || !leg.quantity.is_finite() {
                        return Err(Error::InvalidInput(format!("invalid leg {leg:?}")));
                    }
                }
            }
            Instrument::IrSwap { fixed_period, float_period, notional_schedule, fixed_rate, spread, .. } => {
                ensure_finite("fixed_rate", *fixed_rate)?;
                ensure_finite("spread", *spread)?;
                if !(*fixed_period > 0.0 && *float_period > 0.0) {
                    return Err(Error::InvalidInput("swap periods must be > 0".into()));
                }
                if notional_schedule.is_empty() {
                    return Err(Error::InvalidInput("notional schedule is empty".into()));
                }
                if notional_schedule[0].0 > TIME_EPS {
                    return Err(Error::InvalidInput("notional schedule must start at year 0".into()));
                }
                if notional_schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidInput("notional schedule years must increase".into()));
                }
            }
        }
        Ok(())
    }

    fn check_model(&self, model: &Model) -> Result<()> {
        match (self, model) {
            (Instrument::IrSwap { .. }, Model::G1pp(_)) => Ok(()),
            (Instrument::IrSwap { .. }, Model::Gbm(_)) => {
                Err(Error::Unsupported("interest-rate swap needs the g1pp model".into()))
            }
            (_, Model::Gbm(_)) => Ok(()),
            (_, Model::G1pp(_)) => Err(Error::Unsupported("options need the gbm model".into())),
        }
    }

    /// Quantity-weighted call legs of an option instrument.
    fn legs(&self) -> Vec<Leg> {
        match self {
            Instrument::EuropeanCall { strike, .. } | Instrument::FxCall { strike, .. } => {
                vec![Leg { quantity: 1.0, strike: *strike }]
            }
            Instrument::CallCombination { legs, .. } => legs.clone(),
            Instrument::IrSwap { .. } => Vec::new(),
        }
    }

    /// Every contractual payment date, ascending, without duplicates.
    pub fn flow_dates(&self) -> Vec<f64> {
        match self {
            Instrument::IrSwap { fixed_period, float_period, maturity, .. } => {
                let mut dates = schedule(*float_period, *maturity);
                dates.extend(schedule(*fixed_period, *maturity));
                dates.sort_by(f64::total_cmp);
                dates.dedup_by(|a, b| (*a - *b).abs() < TIME_EPS);
                dates
            }
            _ => vec![self.maturity()],
        }
    }

    /// Payments falling on `date` given the risk-factor state there.
    fn flows_at(&self, model: &Model, date: f64, state: f64, out: &mut Vec<(f64, f64)>) {
        match (self, model) {
            (
                Instrument::IrSwap { fixed_rate, spread, fixed_period, float_period, maturity, notional_schedule },
                Model::G1pp(p),
            ) => {
                let float = schedule(*float_period, *maturity);
                if let Some(i) = float.iter().position(|d| (d - date).abs() < TIME_EPS) {
                    let start = if i == 0 { 0.0 } else { float[i - 1] };
                    let accrual = float[i] - start;
                    let n = notional_at(notional_schedule, start);
                    let p_next = g1pp::zero_bond(
                        p.mean_reversion,
                        p.sigma,
                        p.flat_init_rate,
                        date,
                        date + float_period,
                        state,
                    );
                    let fixing = (1.0 / p_next - 1.0) / float_period;
                    out.push((date, n * accrual * (fixing + spread)));
                }
                let fixed = schedule(*fixed_period, *maturity);
                if let Some(j) = fixed.iter().position(|d| (d - date).abs() < TIME_EPS) {
                    let start = if j == 0 { 0.0 } else { fixed[j - 1] };
                    let n = notional_at(notional_schedule, start);
                    out.push((date, -n * (fixed[j] - start) * fixed_rate));
                }
            }
            _ => {
                if (date - self.maturity()).abs() < TIME_EPS {
                    let payoff: f64 = self.legs().iter().map(|l| l.quantity * (state - l.strike).max(0.0)).sum();
                    out.push((date, payoff));
                }
            }
        }
    }
}

fn schedule(period: f64, maturity: f64) -> Vec<f64> {
    let mut dates = Vec::new();
    let mut k = 1usize;
    loop {
        let d = k as f64 * period;
        if d >= maturity - TIME_EPS {
            break;
        }
        dates.push(d);
        k += 1;
    }
    dates.push(maturity);
    dates
}

fn notional_at(schedule: &[(f64, f64)], t: f64) -> f64 {
    schedule.iter().take_while(|(y, _)| *y <= t + TIME_EPS).last().map(|(_, n)| *n).unwrap_or(schedule[0].1)
}

/// Call-portfolio valuation at a fixed remaining time, with the per-leg
/// constants hoisted out so it can be evaluated at many spots cheaply.
#[derive(Debug, Clone)]
pub struct OptionPricer {
    legs: Vec<(f64, f64)>,
    df_dom: f64,
    df_fgn: f64,
    vol: f64,
    carry: f64,
}

impl OptionPricer {
    pub fn new(model: &Model, inst: &Instrument, t: f64) -> Result<Self> {
        inst.check_model(model)?;
        let Model::Gbm(p) = model else {
            return Err(Error::Unsupported("option pricer needs the gbm model".into()));
        };
        let mat = inst.maturity();
        if !(t >= -TIME_EPS && t <= mat + TIME_EPS) {
            return Err(Error::TimeOutOfRange { t, start: 0.0, end: mat });
        }
        let tau = (mat - t).max(0.0);
        Ok(OptionPricer {
            legs: inst.legs().iter().map(|l| (l.quantity, l.strike)).collect(),
            df_dom: (-p.rate_dom * tau).exp(),
            df_fgn: (-p.rate_fgn * tau).exp(),
            vol: p.sigma * tau.sqrt(),
            carry: (p.rate_dom - p.rate_fgn) * tau,
        })
    }

    /// Portfolio value at spot `s`; agrees with [`portfolio_value`].
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let fwd_spot = s * self.df_fgn;
        if self.vol <= f64::EPSILON * f64::EPSILON {
            return self.legs.iter().map(|&(q, k)| q * (fwd_spot - k * self.df_dom).max(0.0)).sum();
        }
        let ln_s = s.ln();
        let mut v = 0.0;
        for &(q, k) in &self.legs {
            let d1 = (ln_s - k.ln() + self.carry) / self.vol + 0.5 * self.vol;
            let d2 = d1 - self.vol;
            let c = fwd_spot * crate::scalar::norm_cdf(d1) - k * self.df_dom * crate::scalar::norm_cdf(d2);
            v += q * c.max(0.0).min(fwd_spot);
        }
        v
    }
}

/// Value at `t` of all flows paid at or after `t`, in time-`t` money.
pub fn portfolio_value(model: &Model, inst: &Instrument, t: f64, state: f64) -> Result<f64> {
    inst.check_model(model)?;
    let mat = inst.maturity();
    if !(t >= -TIME_EPS && t <= mat + TIME_EPS) {
        return Err(Error::TimeOutOfRange { t, start: 0.0, end: mat });
    }
    ensure_finite("state", state)?;
    let tau = (mat - t).max(0.0);
    match (inst, model) {
        (
            Instrument::IrSwap { fixed_rate, spread, fixed_period, float_period, maturity, notional_schedule },
            Model::G1pp(p),
        ) => {
            let (a, s, r0) = (p.mean_reversion, p.sigma, p.flat_init_rate);
            let bond = |m: f64| if (m - t).abs() < TIME_EPS { 1.0 } else { g1pp::zero_bond(a, s, r0, t, m, state) };
            let b_tenor = g1pp::b_factor(a, *float_period);
            let mut value = 0.0;
            let float = schedule(*float_period, *maturity);
            for (i, &pay) in float.iter().enumerate() {
                if pay < t - TIME_EPS {
                    continue;
                }
                let start = if i == 0 { 0.0 } else { float[i - 1] };
                let accrual = pay - start;
                let n = notional_at(notional_schedule, start);
                let p_pay = bond(pay);
                let p_end = g1pp::zero_bond(a, s, r0, t, pay + float_period, state);
                let convexity = (b_tenor * b_tenor * g1pp::factor_variance(a, s, (pay - t).max(0.0))).exp();
                let fixing_leg = (p_pay * p_pay / p_end * convexity - p_pay) / float_period;
                value += n * accrual * (fixing_leg + spread * p_pay);
            }
            let fixed = schedule(*fixed_period, *maturity);
            for (j, &pay) in fixed.iter().enumerate() {
                if pay < t - TIME_EPS {
                    continue;
                }
                let start = if j == 0 { 0.0 } else { fixed[j - 1] };
                let n = notional_at(notional_schedule, start);
                value -= n * (pay - start) * fixed_rate * bond(pay);
            }
            Ok(value)
        }
        (_, Model::Gbm(p)) => {
            let mut v = 0.0;
            for leg in inst.legs() {
                v += leg.quantity * bs_price(state, leg.strike, p.rate_dom, p.rate_fgn, p.sigma, tau)?;
            }
            Ok(v)
        }
        _ => unreachable!("checked by check_model"),
    }
}

/// Cash delta and cash gamma of an option instrument before expiry.
pub fn greeks(model: &Model, inst: &Instrument, t: f64, state: f64) -> Result<Greeks> {
    inst.check_model(model)?;
    let mat = inst.maturity();
    if t >= mat || t < 0.0 {
        return Err(Error::TimeOutOfRange { t, start: 0.0, end: mat });
    }
    let Model::Gbm(p) = model else {
        return Err(Error::Unsupported("sensitivities are defined for spot-driven options".into()));
    };
    let mut g = Greeks { delta_cash: 0.0, gamma_cash: 0.0 };
    for leg in inst.legs() {
        let (d, gm) = bs_delta_gamma(state, leg.strike, p.rate_dom, p.rate_fgn, p.sigma, mat - t)?;
        g.delta_cash += leg.quantity * d * state;
        g.gamma_cash += leg.quantity * gm * state * state;
    }
    Ok(g)
}

/// Flows with `t <= t_i < t_end`, in time-`t_i` money, from a path given as
/// `(time, state)` samples that include every payment date in the window.
pub fn cashflows_in_window(
    model: &Model,
    inst: &Instrument,
    path: &[(f64, f64)],
    t: f64,
    t_end: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for date in inst.flow_dates() {
        if date < t - TIME_EPS || date >= t_end - TIME_EPS {
            continue;
        }
        let state = path
            .iter()
            .find(|(s, _)| (s - date).abs() < TIME_EPS)
            .map(|(_, x)| *x)
            .ok_or_else(|| Error::InvalidInput(format!("path has no state at payment date {date}")))?;
        inst.flows_at(model, date, state, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbm(spot0: f64, r: f64, rf: f64, sigma: f64) -> Model {
        Model::Gbm(GbmParams { spot0, rate_dom: r, rate_fgn: rf, sigma })
    }

    fn combo() -> Instrument {
        Instrument::CallCombination {
            legs: vec![Leg { quantity: 1.0, strike: 120.0 }, Leg { quantity: -2.0, strike: 150.0 }],
            maturity: 5.0,
        }
    }

    fn swap() -> Instrument {
        Instrument::amortizing_swap(0.045, 0.009, 15.0, 36.2, 63.2)
    }

    #[test]
    fn combination_intrinsic_at_maturity() {
        let v = portfolio_value(&gbm(85.0, 0.03, 0.0, 0.1), &combo(), 5.0, 130.0).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn combination_plausibility_anchor() {
        // bisection for the spot whose combination value at t=0.64 is 6.844
        let m = gbm(85.0, 0.03, 0.0, 0.1);
        let f = |s: f64| portfolio_value(&m, &combo(), 0.64, s).unwrap() - 6.844;
        let (mut lo, mut hi) = (60.0, 125.0);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        let s = 0.5 * (lo + hi);
        assert!(f(s).abs() < 1e-9);
        assert!(s > 85.0 && s < 125.0, "root {s}");
    }

    #[test]
    fn value_after_maturity_is_rejected() {
        assert!(portfolio_value(&gbm(85.0, 0.03, 0.0, 0.1), &combo(), 5.5, 100.0).is_err());
        assert!(greeks(&gbm(85.0, 0.03, 0.0, 0.1), &combo(), 5.0, 100.0).is_err());
    }

    #[test]
    fn model_instrument_mismatch() {
        assert!(portfolio_value(&Model::G1pp(G1ppParams::default()), &combo(), 1.0, 0.0).is_err());
        assert!(portfolio_value(&gbm(85.0, 0.03, 0.0, 0.1), &swap(), 1.0, 100.0).is_err());
    }

    #[test]
    fn combination_converges_to_intrinsic() {
        let m = gbm(85.0, 0.03, 0.0, 0.1);
        let mut sup: f64 = 0.0;
        // grid steps around the strikes; at a strike the time value is O(sigma sqrt(tau))
        for i in 0..=400 {
            let s = 50.25 + i as f64 * 0.5;
            let v = portfolio_value(&m, &combo(), 5.0 - 1e-9, s).unwrap();
            let intrinsic = (s - 120.0).max(0.0) - 2.0 * (s - 150.0).max(0.0);
            sup = sup.max((v - intrinsic).abs());
        }
        assert!(sup <= 1e-6, "sup {sup}");
    }

    fn fd_greeks(m: &Model, inst: &Instrument, t: f64, s: f64) -> Greeks {
        let h = s * 1e-4;
        let v = |x: f64| portfolio_value(m, inst, t, x).unwrap();
        let d = (v(s + h) - v(s - h)) / (2.0 * h);
        let g = (v(s + h) - 2.0 * v(s) + v(s - h)) / (h * h);
        Greeks { delta_cash: d * s, gamma_cash: g * s * s }
    }

    #[test]
    fn greeks_match_finite_differences() {
        let cases = [
            (gbm(85.0, 0.03, 0.0, 0.1), combo(), 0.64, 118.0),
            (gbm(85.0, 0.03, 0.0, 0.1), combo(), 2.0, 140.0),
            (gbm(100.0, 0.08, 0.02, 0.3), Instrument::FxCall { strike: 105.0, maturity: 1.0 }, 0.2, 97.0),
            (gbm(100.0, 0.08, 0.02, 0.3), Instrument::EuropeanCall { strike: 100.0, maturity: 1.0 }, 0.5, 110.0),
        ];
        for (m, inst, t, s) in cases {
            let g = greeks(&m, &inst, t, s).unwrap();
            let fd = fd_greeks(&m, &inst, t, s);
            assert!((g.delta_cash - fd.delta_cash).abs() <= 1e-5 * g.delta_cash.abs().max(1e-3), "{g:?} {fd:?}");
            assert!((g.gamma_cash - fd.gamma_cash).abs() <= 1e-5 * g.gamma_cash.abs().max(1.0), "{g:?} {fd:?}");
        }
    }

    #[test]
    fn combination_gamma_turns_negative_near_short_strike() {
        let m = gbm(85.0, 0.03, 0.0, 0.1);
        let g = greeks(&m, &combo(), 4.5, 150.0).unwrap();
        let fd = fd_greeks(&m, &combo(), 4.5, 150.0);
        assert!(g.gamma_cash < 0.0 && fd.gamma_cash < 0.0);
    }

    #[test]
    fn deep_itm_limits() {
        let m = gbm(100.0, 0.05, 0.02, 0.2);
        let inst = Instrument::FxCall { strike: 10.0, maturity: 1.0 };
        let g = greeks(&m, &inst, 0.5, 500.0).unwrap();
        assert!((g.delta_cash - 500.0 * (-0.02f64 * 0.5).exp()).abs() < 1e-9);
        assert!(g.gamma_cash.abs() < 1e-12);
    }

    #[test]
    fn long_call_gamma_nonnegative() {
        let m = gbm(100.0, 0.05, 0.0, 0.2);
        let inst = Instrument::EuropeanCall { strike: 100.0, maturity: 2.0 };
        for s in [20.0, 80.0, 100.0, 130.0, 400.0] {
            assert!(greeks(&m, &inst, 1.0, s).unwrap().gamma_cash >= 0.0);
        }
    }

    #[test]
    fn pricer_agrees_with_portfolio_value() {
        let m = gbm(85.0, 0.03, 0.0, 0.1);
        for t in [0.0, 0.64, 4.9, 5.0] {
            let pricer = OptionPricer::new(&m, &combo(), t).unwrap();
            for s in [40.0, 85.0, 119.0, 151.0, 300.0] {
                let a = pricer.value(s);
                let b = portfolio_value(&m, &combo(), t, s).unwrap();
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "t={t} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn option_flows() {
        let m = gbm(100.0, 0.08, 0.02, 0.3);
        let inst = Instrument::FxCall { strike: 105.0, maturity: 1.0 };
        let path = [(0.96, 120.0), (1.0, 130.0)];
        assert!(cashflows_in_window(&m, &inst, &path, 0.4, 0.44).unwrap().is_empty());
        let flows = cashflows_in_window(&m, &inst, &path, 0.96, 1.04).unwrap();
        assert_eq!(flows, vec![(1.0, 25.0)]);
        // closed-open window excludes maturity at the right edge
        assert!(cashflows_in_window(&m, &inst, &path, 0.96, 1.0).unwrap().is_empty());
    }

    #[test]
    fn swap_float_flow_in_window() {
        let p = G1ppParams::default();
        let m = Model::G1pp(p);
        let inst = swap();
        let x = 0.004;
        let path = [(3.24, 0.0), (3.25, x), (3.28, 0.0)];
        let flows = cashflows_in_window(&m, &inst, &path, 3.24, 3.28).unwrap();
        assert_eq!(flows.len(), 1);
        let bond = g1pp_bond_price(&p, 3.25, 3.5, x).unwrap();
        let fixing = (1.0 / bond - 1.0) / 0.25;
        let notional = 36.2 + 27.0 * 3.0 / 14.0;
        assert!((flows[0].1 - notional * 0.25 * (fixing + 0.009)).abs() < 1e-12);
    }

    #[test]
    fn notional_schedule_endpoints() {
        let Instrument::IrSwap { notional_schedule, .. } = swap() else { unreachable!() };
        assert_eq!(notional_schedule.len(), 15);
        assert_eq!(notional_schedule[0], (0.0, 36.2));
        assert!((notional_schedule[14].1 - 63.2).abs() < 1e-12);
    }

    /// With no volatility every fixing is the flat forward, so the swap is
    /// the discounted sum of known flows.
    #[test]
    fn deterministic_swap_equals_discounted_flows() {
        let r = 0.036;
        let p = G1ppParams { mean_reversion: 0.1, sigma: 0.0, flat_init_rate: r };
        let m = Model::G1pp(p);
        let inst = swap();
        let t = 2.1;
        let Instrument::IrSwap { notional_schedule, .. } = &inst else { unreachable!() };
        let mut oracle = 0.0;
        for k in 1..=60 {
            let pay = k as f64 * 0.25;
            if pay < t {
                continue;
            }
            let n = notional_schedule[((pay - 0.25) + 1e-9).floor() as usize].1;
            let fixing = ((r * 0.25f64).exp() - 1.0) / 0.25;
            oracle += n * 0.25 * (fixing + 0.009) * (-r * (pay - t)).exp();
        }
        for k in 1..=15 {
            let pay = k as f64;
            if pay < t {
                continue;
            }
            let n = notional_schedule[k - 1].1;
            oracle -= n * 0.045 * (-r * (pay - t)).exp();
        }
        let v = portfolio_value(&m, &inst, t, 0.0).unwrap();
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
    }
}
