//! DIM curves from per-step estimators, RMSE against a benchmark curve,
//! timing passes and report emission.

mod report;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimators::{estimate, ImCross, MethodSpec, Scenario};
use crate::simulation::{simulate_outer, InclusionRule, OuterPathSet};

pub use report::{emit, read_dim_curves, DimRecord, Manifest, OutputDir, RunStatus};

/// Expected initial margin across paths at each evaluated time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimCurve {
    pub method_id: String,
    pub method: MethodSpec,
    pub rule: InclusionRule,
    pub times: Vec<f64>,
    pub dim: Vec<f64>,
    /// Estimation wall time per step, seconds.
    pub step_times: Vec<f64>,
    pub wall_time_total: f64,
    pub warnings: Vec<String>,
}

impl DimCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest single-step increase of the curve.
    pub fn max_increment(&self) -> f64 {
        self.dim.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

fn run_dim(
    scn: &Scenario,
    method: &MethodSpec,
    alpha: f64,
    t_indices: &[usize],
    mut keep: impl FnMut(ImCross),
) -> Result<DimCurve> {
    let mut curve = DimCurve {
        method_id: method.id(),
        method: method.clone(),
        rule: scn.rule,
        times: Vec::with_capacity(t_indices.len()),
        dim: Vec::with_capacity(t_indices.len()),
        step_times: Vec::with_capacity(t_indices.len()),
        wall_time_total: 0.0,
        warnings: Vec::new(),
    };
    for &k in t_indices {
        let t = scn.outer.times.get(k).copied().unwrap_or(f64::NAN);
        let cross = scn.cross(k).map_err(|e| Error::AtTime { t, source: Box::new(e) })?;
        let im = estimate(scn, &cross, method, alpha)?;
        curve.times.push(im.t);
        curve.dim.push(im.mean_im());
        curve.step_times.push(im.wall_time);
        curve.wall_time_total += im.wall_time;
        curve.warnings.extend(im.warnings.iter().cloned());
        keep(im);
    }
    Ok(curve)
}

/// DIM at each grid index in `t_indices`.
pub fn compute_dim(scn: &Scenario, method: &MethodSpec, alpha: f64, t_indices: &[usize]) -> Result<DimCurve> {
    run_dim(scn, method, alpha, t_indices, |_| {})
}

/// As [`compute_dim`], also returning the per-path cross-sections.
pub fn compute_dim_crosses(
    scn: &Scenario,
    method: &MethodSpec,
    alpha: f64,
    t_indices: &[usize],
) -> Result<(DimCurve, Vec<ImCross>)> {
    let mut crosses = Vec::with_capacity(t_indices.len());
    let curve = run_dim(scn, method, alpha, t_indices, |im| crosses.push(im))?;
    Ok((curve, crosses))
}

/// Absolute and relative root-mean-square deviation from the benchmark.
pub fn rmse(curve: &DimCurve, bench: &DimCurve) -> Result<(f64, f64)> {
    if curve.times != bench.times {
        return Err(Error::GridMismatch(format!(
            "{} has {} times, benchmark {} has {}",
            curve.method_id,
            curve.len(),
            bench.method_id,
            bench.len()
        )));
    }
    if curve.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = curve.len() as f64;
    let abs = (curve.dim.iter().zip(&bench.dim).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt();
    let mean = bench.dim.iter().sum::<f64>() / n;
    let rel = if abs == 0.0 { 0.0 } else { abs / mean };
    Ok((abs, rel))
}

/// One comparison method's accuracy and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method_id: String,
    pub rmse_abs: Option<f64>,
    pub rmse_rel: Option<f64>,
    pub time_mean: f64,
    pub time_sd: f64,
    pub spec: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark_id: String,
    pub benchmark_time: f64,
    /// Sorted by `rmse_abs`; failed methods last.
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn row(&self, method_id: &str) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.method_id == method_id)
    }
}

/// Everything produced by a comparison run.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub benchmark: DimCurve,
    pub curves: Vec<DimCurve>,
    /// Per-method cross-sections, kept only when the config asks for them.
    pub crosses: Vec<(String, Vec<ImCross>)>,
    pub report: BenchmarkReport,
}

impl BenchmarkRun {
    pub fn curve(&self, method_id: &str) -> Option<&DimCurve> {
        self.curves.iter().find(|c| c.method_id == method_id)
    }

    pub fn failures(&self) -> Vec<String> {
        self.report
            .rows
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.method_id)))
            .collect()
    }
}

/// Method labels, suffixed `_2`, `_3`, ... when two specs share one.
pub fn unique_ids(methods: &[MethodSpec]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    methods
        .iter()
        .map(|m| {
            let id = m.id();
            let n = seen.entry(id.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                id
            } else {
                format!("{id}_{n}")
            }
        })
        .collect()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Outer simulation shared by every method of a run.
pub fn simulate_for(cfg: &RunConfig) -> Result<OuterPathSet> {
    simulate_outer(&cfg.model, &cfg.instrument, cfg.n_outer, &cfg.grid()?, cfg.seed)
}

/// Runs the benchmark once and every comparison method `repeats` times on
/// one outer path set. Method failures become row errors.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchmarkRun> {
    cfg.validate()?;
    let outer = simulate_for(cfg)?;
    let scn = Scenario {
        model: &cfg.model,
        inst: &cfg.instrument,
        outer: &outer,
        delta: cfg.delta,
        rule: cfg.rule,
        seed: cfg.seed,
    };
    let t_indices = cfg.dim_indices()?;
    let benchmark = compute_dim(&scn, &cfg.benchmark, cfg.alpha, &t_indices)?;
    let mut curves = Vec::new();
    let mut crosses = Vec::new();
    let mut rows = Vec::new();
    for (method, id) in cfg.methods.iter().zip(unique_ids(&cfg.methods)) {
        let spec = serde_json::to_string(method).expect("method spec serializes");
        let first = if cfg.write_im_cross {
            compute_dim_crosses(&scn, method, cfg.alpha, &t_indices).map(|(c, x)| (c, Some(x)))
        } else {
            compute_dim(&scn, method, cfg.alpha, &t_indices).map(|c| (c, None))
        };
        let outcome = first.and_then(|(mut curve, x)| {
            curve.method_id = id.clone();
            let mut times = vec![curve.wall_time_total];
            for _ in 1..cfg.repeats {
                times.push(compute_dim(&scn, method, cfg.alpha, &t_indices)?.wall_time_total);
            }
            let (abs, rel) = rmse(&curve, &benchmark)?;
            Ok((curve, x, times, abs, rel))
        });
        match outcome {
            Ok((curve, x, times, abs, rel)) => {
                let (time_mean, time_sd) = mean_sd(&times);
                rows.push(BenchmarkRow {
                    method_id: id.clone(),
                    rmse_abs: Some(abs),
                    rmse_rel: Some(rel),
                    time_mean,
                    time_sd,
                    spec,
                    error: None,
                });
                if let Some(x) = x {
                    crosses.push((id, x));
                }
                curves.push(curve);
            }
            Err(e) => rows.push(BenchmarkRow {
                method_id: id,
                rmse_abs: None,
                rmse_rel: None,
                time_mean: f64::NAN,
                time_sd: f64::NAN,
                spec,
                error: Some(e.to_string()),
            }),
        }
    }
    rows.sort_by(|a, b| match (a.rmse_abs, b.rmse_abs) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.method_id.cmp(&b.method_id)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.method_id.cmp(&b.method_id),
    });
    let report =
        BenchmarkReport { benchmark_id: benchmark.method_id.clone(), benchmark_time: benchmark.wall_time_total, rows };
    Ok(BenchmarkRun { benchmark, curves, crosses, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::BasisSpec;

    fn curve(id: &str, times: Vec<f64>, dim: Vec<f64>) -> DimCurve {
        DimCurve {
            method_id: id.into(),
            method: MethodSpec::DgNormal,
            rule: InclusionRule::Full,
            step_times: vec![0.0; times.len()],
            times,
            dim,
            wall_time_total: 0.0,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn rmse_examples() {
        let t = vec![0.0, 0.5, 1.0, 1.5];
        let b = curve("b", t.clone(), vec![1.0; 4]);
        assert_eq!(rmse(&b, &b).unwrap(), (0.0, 0.0));
        let (abs, rel) = rmse(&curve("c", t.clone(), vec![1.1; 4]), &b).unwrap();
        assert!((abs - 0.1).abs() < 1e-15 && (rel - 0.1).abs() < 1e-15);
        let alt = curve("a", t.clone(), vec![1.25, 0.75, 1.25, 0.75]);
        assert_eq!(rmse(&alt, &b).unwrap().0, 0.25);
        let short = curve("s", vec![0.0, 0.5], vec![1.0, 1.0]);
        assert!(matches!(rmse(&short, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn duplicate_ids_are_suffixed() {
        let m = MethodSpec::Glsmc { basis: BasisSpec::laguerre(7) };
        let ids = unique_ids(&[m.clone(), MethodSpec::DgNormal, m]);
        assert_eq!(ids, ["glsmc_lag7_x", "dg_normal", "glsmc_lag7_x_2"]);
    }

    #[test]
    fn sample_sd_and_increment() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 2f64.sqrt()));
        assert_eq!(curve("c", vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 2.0]).max_increment(), 1.5);
    }
}
