use nalgebra::DMatrix;

use super::{BasisSpec, Diagnostics, LinearModel};
use crate::error::{Error, Result};
use crate::simulation::sorted_quantile;

/// Relative singular-value cutoff.
const RANK_TOL: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-8;
const MAX_RISES: usize = 10;
/// Rows per gradient-descent block; sized so a block of the frame stays in L1.
const BLOCK: usize = 256;

/// Gradient-descent settings for [`fit_quantile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileOptions {
    /// Half-width of the quadratic zone around the kink, in units of `y`;
    /// `None` uses `1e-3` times the sample interquartile range.
    pub smoothing: Option<f64>,
    pub steps: usize,
    pub learn_rate: f64,
}

impl Default for QuantileOptions {
    fn default() -> Self {
        QuantileOptions { smoothing: None, steps: 5000, learn_rate: 0.5 }
    }
}

/// A basis expansion of one feature sample, factored once by a truncated
/// SVD of the column-scaled design and reused for any number of targets.
#[derive(Debug, Clone)]
pub struct Design {
    basis: BasisSpec,
    n: usize,
    rank: usize,
    /// `n x rank`, column-major, columns orthogonal with squared norm `n`.
    g: Vec<f64>,
    /// `p x rank`: coefficients of the scaled columns per unit of `theta`.
    to_scaled: DMatrix<f64>,
    col_scale: Vec<f64>,
    /// Coordinates of the constant function in the orthonormal frame.
    constant: Vec<f64>,
    condition: f64,
}

impl Design {
    pub fn new(x: &[f64], basis: BasisSpec) -> Result<Self> {
        basis.validate()?;
        let p = basis.n_coeffs();
        let n = x.len();
        if n < p {
            return Err(Error::InsufficientSamples { needed: p, got: n });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("regression feature must be finite".into()));
        }
        let mut m = DMatrix::<f64>::zeros(n, p);
        let mut row = vec![0.0; p];
        for (i, &xi) in x.iter().enumerate() {
            basis.eval_into(xi, &mut row);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        let col_scale: Vec<f64> = (0..p)
            .map(|j| {
                let s = m.column(j).norm() / (n as f64).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for (j, s) in col_scale.iter().enumerate() {
            m.column_mut(j).unscale_mut(*s);
        }
        let svd = m.svd(true, true);
        let u = svd.u.expect("left vectors requested");
        let v_t = svd.v_t.expect("right vectors requested");
        let sigma = svd.singular_values;
        let s_max = sigma.max();
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(Error::Degenerate("design matrix has no usable columns".into()));
        }
        let keep: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > RANK_TOL * s_max).collect();
        let rank = keep.len();
        let s_min = keep.iter().map(|&k| sigma[k]).fold(f64::INFINITY, f64::min);
        let root_n = (n as f64).sqrt();
        let mut g = vec![0.0; n * rank];
        for (c, &k) in keep.iter().enumerate() {
            for i in 0..n {
                g[c * n + i] = u[(i, k)] * root_n;
            }
        }
        let mut to_scaled = DMatrix::<f64>::zeros(p, rank);
        for (c, &k) in keep.iter().enumerate() {
            for j in 0..p {
                to_scaled[(j, c)] = v_t[(k, j)] * root_n / sigma[k];
            }
        }
        let constant: Vec<f64> = g.chunks_exact(n).map(|col| col.iter().sum::<f64>() / n as f64).collect();
        Ok(Design { basis, n, rank, g, to_scaled, col_scale, constant, condition: s_max / s_min })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.g.chunks_exact(self.n)
    }

    fn check_target(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::InvalidInput(format!("target length {} differs from feature length {}", y.len(), self.n)));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("regression target must be finite".into()));
        }
        Ok(())
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        self.columns().map(|col| dot(col, y) / self.n as f64).collect()
    }

    /// `y - G theta`.
    fn residuals(&self, y: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        for (col, t) in self.columns().zip(theta) {
            axpy(-t, col, &mut r);
        }
        r
    }

    fn coeffs(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.col_scale.len())
            .map(|j| {
                let s: f64 = (0..self.rank).map(|c| self.to_scaled[(j, c)] * theta[c]).sum();
                s / self.col_scale[j]
            })
            .collect()
    }

    /// Least-squares fit of `y` on the basis.
    pub fn fit(&self, y: &[f64]) -> Result<LinearModel> {
        self.check_target(y)?;
        let theta = self.project(y);
        let sse: f64 = self.residuals(y, &theta).iter().map(|r| r * r).sum();
        let coeffs = self.coeffs(&theta);
        finite_coeffs(&coeffs)?;
        Ok(LinearModel {
            basis: self.basis,
            coeffs,
            diagnostics: Diagnostics {
                residual_rms: (sse / self.n as f64).sqrt(),
                condition: self.condition,
                rank: self.rank,
                iterations: 0,
                loss: sse / self.n as f64,
            },
        })
    }

    /// Conditional `alpha`-quantile fit by gradient descent on the smoothed
    /// pinball loss in the orthonormal frame.
    pub fn fit_quantile(&self, y: &[f64], alpha: f64, opts: &QuantileOptions) -> Result<LinearModel> {
        self.check_target(y)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(opts.learn_rate > 0.0) || opts.smoothing.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::InvalidInput("learn_rate and smoothing must be positive".into()));
        }
        let n = self.n as f64;
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let iqr = sorted_quantile(&sorted, 0.75)? - sorted_quantile(&sorted, 0.25)?;
        let mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = sd;
        if !(scale > 0.0) {
            let mut m = self.fit(y)?;
            m.diagnostics.loss = 0.0;
            return Ok(m);
        }
        let centre = sorted_quantile(&sorted, 0.5)?;
        let ys: Vec<f64> = y.iter().map(|v| (v - centre) / scale).collect();
        let width = opts.smoothing.unwrap_or(1e-3 * if iqr > 0.0 { iqr } else { sd }) / scale;
        let norm = 1.0 / alpha.min(1.0 - alpha);

        let mut theta = self.project(&ys);
        let mut resid = self.residuals(&ys, &theta);
        resid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let shift = sorted_quantile(&resid, alpha)?;
        for (t, c) in theta.iter_mut().zip(&self.constant) {
            *t += shift * c;
        }
        // residuals are carried along the descent and refreshed at the end;
        // each step sweeps row blocks once, applying the previous update,
        // then the loss, then the gradient
        let mut resid = self.residuals(&ys, &theta);
        let mut deriv = [0.0; BLOCK];
        let mut pending = vec![0.0; self.rank];

        let mut grad = vec![0.0; self.rank];
        let mut best = (f64::INFINITY, theta.clone());
        let mut prev = f64::INFINITY;
        let mut rises = 0;
        let mut damp = 1.0;
        let mut iterations = 0;
        for step in 1..=opts.steps.max(1) {
            iterations = step;
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for lo in (0..self.n).step_by(BLOCK) {
                let hi = (lo + BLOCK).min(self.n);
                let r = &mut resid[lo..hi];
                let d = &mut deriv[..hi - lo];
                for (col, p) in self.columns().zip(&pending) {
                    axpy(-p, &col[lo..hi], r);
                }
                loss += pinball_pass(r, alpha, width, d);
                for (g, col) in grad.iter_mut().zip(self.columns()) {
                    *g -= dot(&col[lo..hi], d);
                }
            }
            loss *= norm / n;
            grad.iter_mut().for_each(|g| *g *= norm / n);
            let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !loss.is_finite() {
                return Err(Error::NonConvergent { step, loss, grad_norm });
            }
            if loss < best.0 {
                best = (loss, theta.clone());
            }
            if grad_norm < GRAD_TOL {
                break;
            }
            if loss > prev {
                rises += 1;
                damp *= 0.5;
                if rises >= MAX_RISES {
                    return Err(Error::NonConvergent { step, loss, grad_norm });
                }
            } else {
                rises = 0;
            }
            prev = loss;
            let lr = damp * opts.learn_rate / (step as f64).sqrt();
            for ((t, g), p) in theta.iter_mut().zip(&grad).zip(pending.iter_mut()) {
                *t -= lr * g;
                *p = -lr * g;
            }
        }

        let (loss, theta) = best;
        let mut coeffs: Vec<f64> = self.coeffs(&theta).iter().map(|c| c * scale).collect();
        coeffs[0] += centre;
        finite_coeffs(&coeffs)?;
        let resid_sq: f64 = self.residuals(&ys, &theta).iter().map(|r| (scale * r).powi(2)).sum();
        Ok(LinearModel {
            basis: self.basis,
            coeffs,
            diagnostics: Diagnostics {
                residual_rms: (resid_sq / n).sqrt(),
                condition: self.condition,
                rank: self.rank,
                iterations,
                loss: loss * scale / norm,
            },
        })
    }
}

/// Four-lane dot product.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a x`.
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Smoothed pinball loss summed over `resid`, derivatives written to `deriv`.
/// Same values as [`smoothed_pinball`](super::smoothed_pinball), written
/// without branches.
fn pinball_pass(resid: &[f64], alpha: f64, width: f64, deriv: &mut [f64]) -> f64 {
    let inv_w = 1.0 / width;
    let one = |r: f64, d: &mut f64| {
        let s = if r >= 0.0 { alpha } else { 1.0 - alpha };
        let a = r.abs();
        let c = a.min(width);
        *d = s * (r * inv_w).clamp(-1.0, 1.0);
        s * (0.5 * c * c * inv_w + (a - c))
    };
    let split = resid.len() / 4 * 4;
    let (head, tail) = resid.split_at(split);
    let (dhead, dtail) = deriv.split_at_mut(split);
    let mut acc = [0.0; 4];
    for (r, d) in head.chunks_exact(4).zip(dhead.chunks_exact_mut(4)) {
        for k in 0..4 {
            acc[k] += one(r[k], &mut d[k]);
        }
    }
    let rest: f64 = tail.iter().zip(dtail).map(|(&r, d)| one(r, d)).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + rest
}

fn finite_coeffs(c: &[f64]) -> Result<()> {
    if c.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Degenerate("non-finite regression coefficients".into()))
    }
}

pub fn fit_least_squares(x: &[f64], y: &[f64], basis: BasisSpec) -> Result<LinearModel> {
    check_lengths(x, y)?;
    Design::new(x, basis)?.fit(y)
}

pub fn fit_quantile(x: &[f64], y: &[f64], basis: BasisSpec, alpha: f64, opts: &QuantileOptions) -> Result<LinearModel> {
    check_lengths(x, y)?;
    Design::new(x, basis)?.fit_quantile(y, alpha, opts)
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("x has {} points, y has {}", x.len(), y.len())));
    }
    Ok(())
}
