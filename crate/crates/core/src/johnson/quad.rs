//! Gauss-Legendre rule on a fixed node count, computed once.

use std::sync::OnceLock;

pub(crate) const NODES: usize = 24;

fn legendre_rule() -> &'static ([f64; NODES], [f64; NODES]) {
    static RULE: OnceLock<([f64; NODES], [f64; NODES])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut x = [0.0; NODES];
        let mut w = [0.0; NODES];
        for i in 0..n {
            let mut r = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, r);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * r * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (r * p1 - p0) / (r * r - 1.0);
                let dr = p1 / dp;
                r -= dr;
                if dr.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = r;
            w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
        }
        (x, w)
    })
}

/// Calls `f(node, weight)` for the rule mapped onto `[a, b]`.
pub(crate) fn for_each_node(a: f64, b: f64, mut f: impl FnMut(f64, f64)) {
    let (x, w) = legendre_rule();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    for i in 0..NODES {
        f(c + h * x[i], h * w[i]);
    }
}

/// Splits `[lo, hi]` at `breaks` and into pieces no longer than `max_len`.
pub(crate) fn panels(lo: f64, hi: f64, breaks: &[f64], max_len: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|b| *b > lo && *b < hi))
        .chain(std::iter::once(hi))
        .collect();
    pts.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let k = (len / max_len).ceil().max(1.0) as usize;
        let step = len / k as f64;
        for j in 0..k {
            out.push((w[0] + j as f64 * step, if j + 1 == k { w[1] } else { w[0] + (j + 1) as f64 * step }));
        }
    }
    out
}
