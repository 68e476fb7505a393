//! Run artifacts: manifest, DIM curves, per-path margins, benchmark rows
//! and timing. Floats use Rust's shortest round-trip rendering.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchmarkReport, BenchmarkRun, DimCurve};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimators::ImCross;

pub const MANIFEST: &str = "run_manifest.json";
pub const DIM_CURVES: &str = "dim_curves.csv";
pub const IM_CROSS: &str = "im_cross.csv";
pub const BENCHMARK: &str = "benchmark.csv";
pub const TIMING: &str = "timing.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Partial,
}

/// Provenance record written before any result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub status: RunStatus,
    pub failures: Vec<String>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            status: RunStatus::Running,
            failures: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), msg: e.to_string() })
    }
}

/// One line of `dim_curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRecord {
    pub t: f64,
    pub dim: f64,
    pub method_id: String,
    pub rule: String,
}

pub fn read_dim_curves(path: &Path) -> Result<Vec<DimRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { path: path.to_path_buf(), msg: format!("{other:?}") },
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Output directory with one writer per artifact.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn csv<F>(&self, name: &str, header: &[&str], body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut csv::Writer<fs::File>) -> csv::Result<()>,
    {
        let path = self.path(name);
        let run = || -> csv::Result<()> {
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            body(&mut w)?;
            w.flush()?;
            Ok(())
        };
        run().map_err(|e| csv_err(&path, e))?;
        Ok(path)
    }

    pub fn write_manifest(&self, m: &Manifest) -> Result<PathBuf> {
        let path = self.path(MANIFEST);
        let body = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn write_dim_curves(&self, curves: &[&DimCurve]) -> Result<PathBuf> {
        self.csv(DIM_CURVES, &["t", "dim", "method_id", "rule"], |w| {
            for c in curves {
                for (t, d) in c.times.iter().zip(&c.dim) {
                    w.write_record([t.to_string(), d.to_string(), c.method_id.clone(), c.rule.name().to_string()])?;
                }
            }
            Ok(())
        })
    }

    pub fn write_im_cross(&self, sets: &[(String, Vec<ImCross>)]) -> Result<PathBuf> {
        self.csv(IM_CROSS, &["t", "path_id", "im", "method_id"], |w| {
            for (id, crosses) in sets {
                for c in crosses {
                    for (p, im) in c.per_path_im.iter().enumerate() {
                        w.write_record([c.t.to_string(), p.to_string(), im.to_string(), id.clone()])?;
                    }
                }
            }
            Ok(())
        })
    }

    /// Accuracy rows only; wall times vary run to run and go to
    /// [`OutputDir::write_timing`].
    pub fn write_benchmark(&self, report: &BenchmarkReport) -> Result<PathBuf> {
        self.csv(BENCHMARK, &["method_id", "rmse_abs", "rmse_rel", "spec", "error"], |w| {
            for r in &report.rows {
                w.write_record([
                    r.method_id.clone(),
                    opt(r.rmse_abs),
                    opt(r.rmse_rel),
                    r.spec.clone(),
                    r.error.clone().unwrap_or_default(),
                ])?;
            }
            Ok(())
        })
    }

    pub fn write_timing(&self, report: &BenchmarkReport) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Row<'a> {
            method_id: &'a str,
            mean: Option<f64>,
            sd: Option<f64>,
        }
        #[derive(Serialize)]
        struct Timing<'a> {
            unit: &'static str,
            benchmark: Row<'a>,
            methods: Vec<Row<'a>>,
        }
        let finite = |x: f64| x.is_finite().then_some(x);
        let body = Timing {
            unit: "seconds",
            benchmark: Row { method_id: &report.benchmark_id, mean: Some(report.benchmark_time), sd: None },
            methods: report
                .rows
                .iter()
                .map(|r| Row { method_id: &r.method_id, mean: finite(r.time_mean), sd: finite(r.time_sd) })
                .collect(),
        };
        let path = self.path(TIMING);
        let text = serde_json::to_string_pretty(&body).expect("timing serializes") + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Writes every artifact of a comparison run, manifest first.
pub fn emit(cfg: &RunConfig, run: &BenchmarkRun, out_dir: &Path) -> Result<Manifest> {
    let dir = OutputDir::create(out_dir)?;
    let mut manifest = Manifest::new("compare", cfg);
    dir.write_manifest(&manifest)?;
    let mut curves = vec![&run.benchmark];
    curves.extend(run.curves.iter());
    dir.write_dim_curves(&curves)?;
    if cfg.write_im_cross {
        dir.write_im_cross(&run.crosses)?;
    }
    dir.write_benchmark(&run.report)?;
    dir.write_timing(&run.report)?;
    manifest.failures = run.failures();
    manifest.status = if manifest.failures.is_empty() { RunStatus::Complete } else { RunStatus::Partial };
    dir.write_manifest(&manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::super::BenchmarkRow;
    use super::*;
    use crate::estimators::MethodSpec;
    use crate::simulation::InclusionRule;

    fn curve(id: &str) -> DimCurve {
        DimCurve {
            method_id: id.into(),
            method: MethodSpec::DgNormal,
            rule: InclusionRule::None,
            times: vec![0.0, 0.1, 1.0 / 3.0],
            dim: vec![1e-300, 0.1 + 0.2, 12345.678901234567],
            step_times: vec![0.0; 3],
            wall_time_total: 0.0,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn empty_curve_list_is_header_only() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = OutputDir::create(tmp.path()).unwrap();
        let p = dir.write_dim_curves(&[]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "t,dim,method_id,rule\n");
        assert!(read_dim_curves(&p).unwrap().is_empty());
    }

    #[test]
    fn csv_values_round_trip_exactly() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = OutputDir::create(tmp.path()).unwrap();
        let c = curve("dg_normal");
        let rows = read_dim_curves(&dir.write_dim_curves(&[&c]).unwrap()).unwrap();
        for (r, (t, d)) in rows.iter().zip(c.times.iter().zip(&c.dim)) {
            assert_eq!((r.t, r.dim), (*t, *d));
            assert_eq!((r.method_id.as_str(), r.rule.as_str()), ("dg_normal", "none"));
        }
    }

    #[test]
    fn benchmark_spec_column_is_quoted() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = OutputDir::create(tmp.path()).unwrap();
        let spec = serde_json::to_string(&MethodSpec::RawPseudo { k: 200, key: Default::default() }).unwrap();
        let report = BenchmarkReport {
            benchmark_id: "nested_mc_n500".into(),
            benchmark_time: 1.0,
            rows: vec![BenchmarkRow {
                method_id: "raw_pseudo_k200_x".into(),
                rmse_abs: Some(0.5),
                rmse_rel: Some(0.25),
                time_mean: 0.1,
                time_sd: 0.0,
                spec: spec.clone(),
                error: None,
            }],
        };
        let p = dir.write_benchmark(&report).unwrap();
        let mut r = csv::Reader::from_path(&p).unwrap();
        let rec = r.records().next().unwrap().unwrap();
        assert_eq!(&rec[3], spec.as_str());
        assert_eq!(&rec[1], "0.5");
    }
}
