use std::sync::OnceLock;

use super::quad::{for_each_node, panels};
use super::{Family, JohnsonParams};
use crate::error::{Error, Result};
use crate::scalar::{norm_pdf, Real};

/// Half-width of the band around the lognormal line that selects SL.
pub const SL_BAND: f64 = 1e-3;
const SN_BETA1: f64 = 1e-8;
const SN_BETA2: f64 = 1e-6;

/// Four raw moments with the derived central moments and shape ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet<T> {
    pub r1: T,
    pub r2: T,
    pub r3: T,
    pub r4: T,
    pub cm2: T,
    pub cm3: T,
    pub cm4: T,
    /// Squared skewness `cm3^2 / cm2^3`.
    pub beta1: T,
    /// Kurtosis `cm4 / cm2^2`.
    pub beta2: T,
    pub skew_sign: T,
}

/// Central moments from raw moments; rejects a variance lost to cancellation.
pub fn central_from_raw<T: Real>(r1: T, r2: T, r3: T, r4: T) -> Result<MomentSet<T>> {
    if ![r1, r2, r3, r4].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("raw moments must be finite".into()));
    }
    let c = T::lit;
    let cm2 = r2 - r1 * r1;
    let cm3 = r3 - c(3.0) * r1 * r2 + c(2.0) * r1 * r1 * r1;
    let cm4 = r4 - c(4.0) * r1 * r3 + c(6.0) * r1 * r1 * r2 - c(3.0) * r1.powi(4);
    let floor = c(1e-14) * r2.abs();
    if !(cm2 > floor) {
        return Err(Error::Degenerate(format!("variance {cm2} at or below floor {floor}")));
    }
    Ok(MomentSet {
        r1,
        r2,
        r3,
        r4,
        cm2,
        cm3,
        cm4,
        beta1: cm3 * cm3 / (cm2 * cm2 * cm2),
        beta2: cm4 / (cm2 * cm2),
        skew_sign: if cm3 < T::zero() { -T::one() } else { T::one() },
    })
}

impl<T: Real> MomentSet<T> {
    /// Moment set with the given mean, variance and shape ratios.
    pub fn from_shape(mean: T, cm2: T, beta1: T, beta2: T, skew_sign: T) -> Self {
        let c = T::lit;
        let skew = skew_sign.signum() * beta1.max(T::zero()).sqrt();
        let cm3 = skew * cm2 * cm2.sqrt();
        let cm4 = beta2 * cm2 * cm2;
        let m = mean;
        MomentSet {
            r1: m,
            r2: cm2 + m * m,
            r3: cm3 + c(3.0) * m * cm2 + m * m * m,
            r4: cm4 + c(4.0) * m * cm3 + c(6.0) * m * m * cm2 + m.powi(4),
            cm2,
            cm3,
            cm4,
            beta1,
            beta2,
            skew_sign: if skew_sign < T::zero() { -T::one() } else { T::one() },
        }
    }

    /// Population moments of a sample, accumulated about the sample mean.
    pub fn from_samples(samples: &[T]) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::InsufficientSamples { needed: 4, got: samples.len() });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite".into()));
        }
        let n = T::lit(samples.len() as f64);
        let mean = samples.iter().fold(T::zero(), |a, &v| a + v) / n;
        let (mut s2, mut s3, mut s4) = (T::zero(), T::zero(), T::zero());
        for &v in samples {
            let d = v - mean;
            let d2 = d * d;
            s2 = s2 + d2;
            s3 = s3 + d2 * d;
            s4 = s4 + d2 * d2;
        }
        let (cm2, cm3, cm4) = (s2 / n, s3 / n, s4 / n);
        if !(cm2 > T::zero()) {
            return Err(Error::Degenerate("sample variance is zero".into()));
        }
        let sign = if cm3 < T::zero() { -T::one() } else { T::one() };
        Ok(Self::from_shape(mean, cm2, cm3 * cm3 / (cm2 * cm2 * cm2), cm4 / (cm2 * cm2), sign))
    }

    pub fn mean(&self) -> T {
        self.r1
    }

    pub fn sd(&self) -> T {
        self.cm2.sqrt()
    }

    pub fn skewness(&self) -> T {
        self.skew_sign * self.beta1.sqrt()
    }

    pub fn check(&self) -> BetaCheck {
        validate_beta(self.beta1, self.beta2)
    }

    /// Same mean and variance with `(beta1, beta2)` replaced.
    pub fn with_beta(&self, beta1: T, beta2: T) -> Self {
        Self::from_shape(self.r1, self.cm2, beta1, beta2, self.skew_sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaCheck {
    Valid,
    Invalid,
}

/// Every distribution satisfies `beta2 >= beta1 + 1`.
pub fn validate_beta<T: Real>(beta1: T, beta2: T) -> BetaCheck {
    if beta2 >= beta1 + T::one() {
        BetaCheck::Valid
    } else {
        BetaCheck::Invalid
    }
}

/// Orthogonal projection of an infeasible pair onto `beta2 = beta1 + 1`,
/// constrained to `beta1 >= 0`; feasible pairs are returned unchanged.
pub fn project_beta<T: Real>(beta1: T, beta2: T) -> (T, T) {
    if validate_beta(beta1, beta2) == BetaCheck::Valid {
        return (beta1, beta2);
    }
    let b1 = ((beta1 + beta2 - T::one()) / T::lit(2.0)).max(T::zero());
    (b1, b1 + T::one())
}

/// `omega = exp(sigma^2)` of the lognormal with squared skewness `beta1`,
/// and the lognormal kurtosis at that skewness.
pub(crate) fn lognormal_line(beta1: f64) -> (f64, f64) {
    let u = (1.0 + 0.5 * beta1 + (beta1 * (1.0 + 0.25 * beta1)).sqrt()).cbrt();
    let w = u + 1.0 / u - 1.0;
    (w, w.powi(4) + 2.0 * w.powi(3) + 3.0 * w * w - 3.0)
}

/// Moment-matched Johnson fit with the default tolerances
/// (Newton residual 1e-10, 200 damped iterations).
pub fn fit_moments_default<T: Real>(m: &MomentSet<T>) -> Result<JohnsonParams<T>> {
    fit_moments(m, T::lit(1e-10), 200)
}

/// Family selection by position relative to the lognormal line, then SL and
/// SU in closed form and SB by damped Newton iteration. The fit runs in
/// `f64` whatever the caller's scalar.
pub fn fit_moments<T: Real>(m: &MomentSet<T>, tol: T, max_iter: usize) -> Result<JohnsonParams<T>> {
    let (mean, cm2, b1, b2) = (m.r1.as_f64(), m.cm2.as_f64(), m.beta1.as_f64(), m.beta2.as_f64());
    let sign = if m.skew_sign < T::zero() { -1.0 } else { 1.0 };
    if !(cm2 > 0.0) || !b1.is_finite() || !b2.is_finite() || b1 < 0.0 {
        return Err(Error::InvalidInput(format!("moment set not fittable: cm2={cm2}, beta=({b1}, {b2})")));
    }
    if b2 < b1 + 1.0 - 1e-12 * (1.0 + b2) {
        return Err(Error::InvalidInput(format!("beta2 {b2} < beta1 + 1 = {}; project first", b1 + 1.0)));
    }
    let sd = cm2.sqrt();
    if b1 < SN_BETA1 && (b2 - 3.0).abs() < SN_BETA2 {
        return Ok(JohnsonParams::normal(m.r1, m.cm2.sqrt()));
    }
    let (w, b2_line) = lognormal_line(b1);
    let fitted = if (b2 - b2_line).abs() < SL_BAND {
        if w - 1.0 < 1e-12 {
            JohnsonParams::normal(mean, sd)
        } else {
            fit_sl(mean, sd, w, sign)
        }
    } else if b2 > b2_line {
        fit_su(mean, sd, sign * b1.sqrt(), b2, tol.as_f64(), max_iter)?
    } else {
        fit_sb(mean, sd, sign * b1.sqrt(), b2, tol.as_f64(), max_iter)?
    };
    fitted.validate()?;
    Ok(fitted.cast())
}

fn fit_sl(mean: f64, sd: f64, w: f64, sign: f64) -> JohnsonParams<f64> {
    let delta = 1.0 / w.ln().sqrt();
    let gamma = 0.5 * delta * (w * (w - 1.0) / (sd * sd)).ln();
    JohnsonParams { family: Family::SL, gamma, delta, xi: mean - sign * sd / (w - 1.0).sqrt(), lambda: sign }
}

/// Mean, variance, third and fourth central moments of `sinh((Z - gamma) / delta)`.
pub(crate) fn su_moments(gamma: f64, delta: f64) -> [f64; 4] {
    let om = gamma / delta;
    let w = (1.0 / (delta * delta)).exp();
    let mean = -w.sqrt() * om.sinh();
    let var = 0.5 * (w - 1.0) * (w * (2.0 * om).cosh() + 1.0);
    let mu3 = -0.25 * w.sqrt() * (w - 1.0).powi(2) * (w * (w + 2.0) * (3.0 * om).sinh() + 3.0 * om.sinh());
    let mu4 = 0.125
        * (w - 1.0).powi(2)
        * (w * w * (w.powi(4) + 2.0 * w.powi(3) + 3.0 * w * w - 3.0) * (4.0 * om).cosh()
            + 4.0 * w * w * (w + 2.0) * (2.0 * om).cosh()
            + 3.0 * (2.0 * w + 1.0));
    [mean, var, mu3, mu4]
}

fn su_shape(gamma: f64, log_delta: f64) -> [f64; 2] {
    let [_, v, m3, m4] = su_moments(gamma, log_delta.exp());
    [m3 / v.powf(1.5), m4 / (v * v)]
}

/// `(skew, beta2)` at `omega`, `Omega`.
fn su_beta_at(w: f64, om: f64) -> (f64, f64) {
    let delta = 1.0 / w.ln().sqrt();
    let [s, b2] = su_shape(om * delta, delta.ln());
    (s, b2)
}

/// `Omega >= 0` at which `beta1(omega, Omega)` equals `b1`; `beta1` rises
/// monotonically in `Omega` towards the lognormal value for this `omega`.
fn su_omega_for_beta1(w: f64, b1: f64) -> f64 {
    let beta1 = |om: f64| {
        let (s, _) = su_beta_at(w, om);
        s * s
    };
    let mut hi = 1.0;
    while beta1(hi) < b1 && hi < 170.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if beta1(mid) < b1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// SU fit. For fixed `omega = exp(delta^-2)` the skewness fixes `Omega =
/// gamma / delta`; kurtosis along that curve rises from the lognormal line
/// to the symmetric value, so `omega` is bracketed and bisected, then the
/// pair is polished by Newton on the closed-form shape ratios.
fn fit_su(mean: f64, sd: f64, skew: f64, b2: f64, tol: f64, max_iter: usize) -> Result<JohnsonParams<f64>> {
    let b1 = skew * skew;
    let w_hi = ((2.0 * b2 - 2.0).sqrt() - 1.0).sqrt();
    let (om, w) = if b1 < 1e-16 {
        (0.0, w_hi)
    } else {
        let w_lo = lognormal_line(b1).0;
        let kurt = |w: f64| su_beta_at(w, su_omega_for_beta1(w, b1)).1;
        // ln(omega - 1) keeps resolution near omega = 1
        let (mut lo, mut hi) = ((w_lo - 1.0).ln(), (w_hi - 1.0).ln());
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if kurt(1.0 + mid.exp()) < b2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = 1.0 + (0.5 * (lo + hi)).exp();
        (su_omega_for_beta1(w, b1), w)
    };
    if !(w > 1.0) || !om.is_finite() {
        return Err(Error::NoFit { iterations: 0, residual: f64::NAN });
    }
    let delta0 = (1.0 / w.ln()).sqrt();
    // positive Omega skews left
    let g0 = if skew > 0.0 { -om * delta0 } else { om * delta0 };
    let (g, ld) = newton_2d(su_shape, [g0, delta0.ln()], [skew, b2], tol, max_iter, [-1e4, 1e4], [-8.0, 8.0])?;
    let delta = ld.exp();
    let [my, vy, _, _] = su_moments(g, delta);
    let lambda = sd / vy.sqrt();
    Ok(JohnsonParams { family: Family::SU, gamma: g, delta, xi: mean - lambda * my, lambda })
}

/// Mean, central moments 2..4 and their derivatives in `(gamma, ln delta)`
/// for the logistic transform of a standard normal.
struct SbEval {
    mean: f64,
    mu: [f64; 3],
    d_mean: [f64; 2],
    d_mu: [[f64; 2]; 3],
}

fn sb_eval(gamma: f64, delta: f64) -> SbEval {
    let breaks = [gamma - 6.0 * delta, gamma, gamma + 6.0 * delta];
    let mut pieces = Vec::new();
    for (a, b) in panels(-12.0, 12.0, &breaks, 1.0) {
        let inside = b > breaks[0] && a < breaks[2];
        if inside && b - a > 1.5 * delta {
            pieces.extend(panels(a, b, &[], 1.5 * delta));
        } else {
            pieces.push((a, b));
        }
    }
    // node values: (weight * phi, g, dg/dgamma, dg/dlog_delta)
    let mut nodes = Vec::with_capacity(pieces.len() * super::quad::NODES);
    for (a, b) in pieces {
        for_each_node(a, b, |z, w| {
            let u = (z - gamma) / delta;
            let g = 1.0 / (1.0 + (-u).exp());
            let gc = 1.0 / (1.0 + u.exp());
            let slope = g * gc;
            nodes.push((w * norm_pdf(z), g, -slope / delta, -slope * u));
        });
    }
    let mut mean = 0.0;
    let mut d_mean = [0.0; 2];
    for &(wp, g, dg, ds) in &nodes {
        mean += wp * g;
        d_mean[0] += wp * dg;
        d_mean[1] += wp * ds;
    }
    let mut mu = [0.0; 3];
    let mut raw_d = [[0.0; 2]; 3];
    for &(wp, g, dg, ds) in &nodes {
        let e = g - mean;
        let (e2, e3) = (e * e, e * e * e);
        mu[0] += wp * e2;
        mu[1] += wp * e3;
        mu[2] += wp * e2 * e2;
        for (k, pow) in [e, e2, e3].iter().enumerate() {
            raw_d[k][0] += wp * pow * dg;
            raw_d[k][1] += wp * pow * ds;
        }
    }
    // d/dθ E[(g - m)^k] = k E[(g - m)^(k-1) dg] - k dm E[(g - m)^(k-1)]
    let mut d_mu = [[0.0; 2]; 3];
    let lower = [0.0, mu[0], mu[1]];
    for k in 0..3 {
        let order = (k + 2) as f64;
        for j in 0..2 {
            d_mu[k][j] = order * raw_d[k][j] - order * d_mean[j] * lower[k];
        }
    }
    SbEval { mean, mu, d_mean, d_mu }
}

fn sb_shape(e: &SbEval) -> ([f64; 2], [[f64; 2]; 2]) {
    let [v, m3, m4] = e.mu;
    let skew = m3 / v.powf(1.5);
    let b2 = m4 / (v * v);
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let (dv, d3, d4) = (e.d_mu[0][j], e.d_mu[1][j], e.d_mu[2][j]);
        jac[0][j] = d3 / v.powf(1.5) - 1.5 * m3 * dv / v.powf(2.5);
        jac[1][j] = d4 / (v * v) - 2.0 * m4 * dv / (v * v * v);
    }
    let _ = e.d_mean;
    ([skew, b2], jac)
}

/// Coarse `(gamma, delta) -> (skew, beta2)` table over positive skew used to
/// start the SB iteration.
fn sb_table() -> &'static Vec<(f64, f64, f64, f64)> {
    static TABLE: OnceLock<Vec<(f64, f64, f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::new();
        let (lo, hi) = (1e-8f64.ln(), 30.0f64.ln());
        for i in 0..100 {
            let delta = (lo + (hi - lo) * i as f64 / 99.0).exp();
            for j in 0..60 {
                let gamma = 6.0 * j as f64 / 59.0 * (1.0 + delta);
                let ([s, b2], _) = sb_shape(&sb_eval(gamma, delta));
                if s.is_finite() && b2.is_finite() {
                    t.push((gamma, delta.ln(), s, b2));
                }
            }
        }
        t
    })
}

fn sb_key(skew: f64, b2: f64) -> (f64, f64) {
    (skew.asinh(), (b2 - skew * skew - 1.0).max(1e-300).ln())
}

/// Bisection start for SB when Newton from the table stalls. At fixed
/// `delta` skewness rises with `gamma` towards the lognormal value, and
/// kurtosis along the matched-skew curve rises with `delta` from the
/// two-point boundary to the lognormal line.
fn sb_bracket(skew: f64, b2: f64) -> [f64; 2] {
    let shape = |g: f64, d: f64| sb_shape(&sb_eval(g, d)).0;
    let gamma_for = |d: f64| {
        if skew <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while shape(hi, d)[0] < skew && hi < 500.0 {
            hi *= 2.0;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if shape(mid, d)[0] < skew {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let w = lognormal_line(skew * skew).0;
    let d_line = if w > 1.0 { (1.0 / w.ln()).sqrt() } else { 1e3 };
    let (mut lo, mut hi) = (1e-13f64.ln(), d_line.min(1e3).ln());
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let d = mid.exp();
        if shape(gamma_for(d), d)[1] < b2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = (0.5 * (lo + hi)).exp();
    [gamma_for(d), d.ln()]
}

fn fit_sb(mean: f64, sd: f64, skew: f64, b2: f64, tol: f64, max_iter: usize) -> Result<JohnsonParams<f64>> {
    let target = [skew.abs(), b2];
    let key = sb_key(target[0], b2);
    let start = sb_table()
        .iter()
        .map(|&(g, ld, s, b)| {
            let k = sb_key(s, b);
            ((k.0 - key.0).powi(2) + (k.1 - key.1).powi(2), [g, ld])
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .expect("table non-empty");
    let shape = |g: f64, ld: f64| sb_shape(&sb_eval(g, ld.exp()));
    let bounds = ([0.0, 500.0], [-30.0, 8.0]);
    let (g, ld) = match newton_2d_jac(shape, start, target, tol, max_iter, bounds.0, bounds.1) {
        Ok(x) => x,
        Err(_) => {
            let start = sb_bracket(target[0], b2);
            newton_2d_jac(shape, start, target, tol, max_iter, bounds.0, bounds.1)?
        }
    };
    let gamma = if skew < 0.0 { -g } else { g };
    let delta = ld.exp();
    let e = sb_eval(gamma, delta);
    let lambda = sd / e.mu[0].sqrt();
    Ok(JohnsonParams { family: Family::SB, gamma, delta, xi: mean - lambda * e.mean, lambda })
}

fn newton_2d(
    f: impl Fn(f64, f64) -> [f64; 2],
    start: [f64; 2],
    target: [f64; 2],
    tol: f64,
    max_iter: usize,
    g_bounds: [f64; 2],
    s_bounds: [f64; 2],
) -> Result<(f64, f64)> {
    let with_jac = |g: f64, s: f64| {
        let v = f(g, s);
        let h = 1e-6;
        let vg = [f(g + h, s), f(g - h, s)];
        let vs = [f(g, s + h), f(g, s - h)];
        let mut jac = [[0.0; 2]; 2];
        for i in 0..2 {
            jac[i][0] = (vg[0][i] - vg[1][i]) / (2.0 * h);
            jac[i][1] = (vs[0][i] - vs[1][i]) / (2.0 * h);
        }
        (v, jac)
    };
    newton_2d_jac(with_jac, start, target, tol, max_iter, g_bounds, s_bounds)
}

/// Damped Newton on `F(g, s) = target` with step halving on the residual
/// norm, clamped to a box.
fn newton_2d_jac(
    f: impl Fn(f64, f64) -> ([f64; 2], [[f64; 2]; 2]),
    start: [f64; 2],
    target: [f64; 2],
    tol: f64,
    max_iter: usize,
    g_bounds: [f64; 2],
    s_bounds: [f64; 2],
) -> Result<(f64, f64)> {
    let clamp = |x: [f64; 2]| [x[0].clamp(g_bounds[0], g_bounds[1]), x[1].clamp(s_bounds[0], s_bounds[1])];
    let resid = |v: [f64; 2]| [v[0] - target[0], v[1] - target[1]];
    let norm = |r: [f64; 2]| (r[0].abs() / (1.0 + target[0].abs())).max(r[1].abs() / (1.0 + target[1].abs()));
    let mut x = clamp(start);
    let (mut v, mut jac) = f(x[0], x[1]);
    let mut r = resid(v);
    // beta1 residual is 2 |skew| times the skew residual; both relative
    let b1 = target[0] * target[0];
    let conv =
        |r: [f64; 2]| (2.0 * target[0].abs() + 1.0) * r[0].abs() <= tol * (1.0 + b1) && r[1].abs() <= tol * (1.0 + target[1].abs());
    for it in 0..max_iter {
        if r.iter().all(|c| c.is_finite()) && conv(r) {
            return Ok((x[0], x[1]));
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det == 0.0 || !r.iter().all(|c| c.is_finite()) {
            return Err(Error::NoFit { iterations: it, residual: norm(r) });
        }
        let step = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let mut damp = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = clamp([x[0] - damp * step[0], x[1] - damp * step[1]]);
            let (cv, cj) = f(cand[0], cand[1]);
            let cr = resid(cv);
            if cr.iter().all(|c| c.is_finite()) && norm(cr) < norm(r) {
                x = cand;
                v = cv;
                jac = cj;
                r = cr;
                accepted = true;
                break;
            }
            damp *= 0.5;
        }
        if !accepted {
            return if conv(r) { Ok((x[0], x[1])) } else { Err(Error::NoFit { iterations: it, residual: norm(r) }) };
        }
    }
    let _ = v;
    if conv(r) {
        Ok((x[0], x[1]))
    } else {
        Err(Error::NoFit { iterations: max_iter, residual: norm(r) })
    }
}

/// First four raw moments of a Johnson distribution: closed form for SN,
/// SL and SU, quadrature for SB.
pub fn raw_moments(p: &JohnsonParams<f64>) -> [f64; 4] {
    let (mean_y, mu) = match p.family {
        Family::SN => (-p.gamma, [1.0, 0.0, 3.0]),
        Family::SL => {
            let w = (1.0 / (p.delta * p.delta)).exp();
            let scale = (-p.gamma / p.delta).exp();
            let mean = scale * w.sqrt();
            let v = scale * scale * w * (w - 1.0);
            let skew = (w + 2.0) * (w - 1.0).sqrt();
            let kurt = w.powi(4) + 2.0 * w.powi(3) + 3.0 * w * w - 3.0;
            (mean, [v, skew * v.powf(1.5), kurt * v * v])
        }
        Family::SU => {
            let [m, v, m3, m4] = su_moments(p.gamma, p.delta);
            (m, [v, m3, m4])
        }
        Family::SB => {
            let e = sb_eval(p.gamma, p.delta);
            (e.mean, e.mu)
        }
    };
    // x = xi + lambda * y (SN: y = z - gamma with delta = 1)
    let (m, l) = (p.xi + p.lambda * mean_y, p.lambda);
    let (c2, c3, c4) = (l * l * mu[0], l.powi(3) * mu[1], l.powi(4) * mu[2]);
    [m, c2 + m * m, c3 + 3.0 * m * c2 + m.powi(3), c4 + 4.0 * m * c3 + 6.0 * m * m * c2 + m.powi(4)]
}
