use fvar::pipeline::{read_dim_curves, Manifest, RunStatus};
use fvar::{emit, run_benchmark, RunConfig};

const FX: &str = r#"{
    "model": {"type": "gbm", "spot0": 100.0, "rate_dom": 0.08, "rate_fgn": 0.02, "sigma": 0.3},
    "instrument": {"type": "fx_call", "strike": 105.0, "maturity": 1.0},
    "n_outer": 300,
    "delta": 0.04,
    "dim_every": 8,
    "benchmark": {"method": "nested_mc", "n_inner": 50},
    "methods": [{"method": "glsmc"}, {"method": "raw_pseudo", "k": 30}, {"method": "glsmc"}],
    "seed": 3,
    "repeats": 2,
    "write_im_cross": true
}"#;

const SWAP: &str = r#"{
    "model": {"type": "g1pp", "mean_reversion": 0.03, "sigma": 0.01, "flat_init_rate": 0.03},
    "instrument": {"type": "ir_swap", "fixed_rate": 0.03, "spread": 0.0, "fixed_period": 0.5,
                   "float_period": 0.25, "maturity": 1.0, "notional_schedule": [[0.0, 1000000.0]]},
    "n_outer": 150,
    "delta": 0.125,
    "benchmark": {"method": "nested_mc", "n_inner": 20},
    "methods": [{"method": "glsmc"}, {"method": "dg_normal"}],
    "repeats": 1
}"#;

#[test]
fn emitted_artifacts_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(FX).unwrap();
    let run = run_benchmark(&cfg).unwrap();
    let manifest = emit(&cfg, &run, tmp.path()).unwrap();
    assert_eq!(manifest.status, RunStatus::Complete);
    assert_eq!(Manifest::read(&tmp.path().join("run_manifest.json")).unwrap(), manifest);

    let ids: Vec<&str> = run.report.rows.iter().map(|r| r.method_id.as_str()).collect();
    assert!(ids.contains(&"glsmc_lag7_x") && ids.contains(&"glsmc_lag7_x_2"));
    // identical specs on one path set give identical curves
    assert_eq!(run.curve("glsmc_lag7_x").unwrap().dim, run.curve("glsmc_lag7_x_2").unwrap().dim);

    let rows = read_dim_curves(&tmp.path().join("dim_curves.csv")).unwrap();
    let mut expected = vec![&run.benchmark];
    expected.extend(run.curves.iter());
    let flat: Vec<(f64, f64, &str)> =
        expected.iter().flat_map(|c| c.times.iter().zip(&c.dim).map(|(t, d)| (*t, *d, c.method_id.as_str()))).collect();
    assert_eq!(rows.len(), flat.len());
    for (r, (t, d, id)) in rows.iter().zip(flat) {
        assert_eq!((r.t, r.dim, r.method_id.as_str()), (t, d, id));
    }

    let im = std::fs::read_to_string(tmp.path().join("im_cross.csv")).unwrap();
    assert_eq!(im.lines().count(), 1 + 3 * cfg.dim_indices().unwrap().len() * cfg.n_outer);
    let timing: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["methods"].as_array().unwrap().len(), 3);
}

#[test]
fn failing_method_marks_the_run_partial() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(SWAP).unwrap();
    let run = run_benchmark(&cfg).unwrap();
    let bad = run.report.row("dg_normal").unwrap();
    assert!(bad.rmse_abs.is_none() && bad.error.is_some());
    assert_eq!(run.report.rows.last().unwrap().method_id, "dg_normal");
    assert!(run.report.row("glsmc_lag7_x").unwrap().rmse_abs.is_some());

    let manifest = emit(&cfg, &run, tmp.path()).unwrap();
    assert_eq!(manifest.status, RunStatus::Partial);
    assert_eq!(manifest.failures.len(), 1);
    let bench = std::fs::read_to_string(tmp.path().join("benchmark.csv")).unwrap();
    let last = bench.lines().last().unwrap();
    assert!(last.starts_with("dg_normal,,,"), "{last}");
}

#[test]
fn dim_curves_are_finite_nonnegative_on_a_shared_grid() {
    let cfg = RunConfig::from_json(FX).unwrap();
    let run = run_benchmark(&cfg).unwrap();
    for c in std::iter::once(&run.benchmark).chain(&run.curves) {
        assert!(c.dim.iter().all(|d| d.is_finite() && *d >= 0.0), "{}", c.method_id);
        assert_eq!(c.times, run.benchmark.times);
    }
}
