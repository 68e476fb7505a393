use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fvar::config::{parse_config, Overrides, RunConfig};
use fvar::estimators::{MethodSpec, Scenario};
use fvar::johnson::{fit_moments_default, fit_percentiles_samples, MomentSet, DEFAULT_Z};
use fvar::pipeline::{
    compute_dim, compute_dim_crosses, emit, run_benchmark, simulate_for, unique_ids, Manifest, OutputDir, RunStatus,
};
use fvar::simulation::write_paths;
use fvar::{Error, Result};

/// Future value-at-risk and dynamic initial margin estimators.
#[derive(Debug, Parser)]
#[command(name = "fvar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Values that override the configuration file.
#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Tail probability, 0 < alpha < 1 [config default: 0.01].
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for every random stream [config default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory [config default: out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of outer paths, at least 100.
    #[arg(long)]
    n_outer: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let o = Overrides {
            alpha: self.alpha,
            seed: self.seed,
            threads: self.threads,
            out_dir: self.out.clone(),
            n_outer: self.n_outer,
        };
        let cfg = parse_config(&self.config, &o)?;
        if let Some(n) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::config("threads", e.to_string()))?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitMethod {
    Moments,
    Percentile,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate outer paths and export them as CSV.
    Simulate(Common),
    /// DIM curve for one method.
    Dim {
        #[command(flatten)]
        common: Common,
        /// Method id from the config (e.g. glsmc_lag7_x), or a method name
        /// (nested_mc, glsmc, jlsmc, quantile_reg, dg_normal, dg_cf, jpp,
        /// raw_pseudo) taking the first configured match or its defaults.
        #[arg(long)]
        method: String,
    },
    /// Benchmark every configured method against the benchmark method.
    Compare(Common),
    /// Fit a Johnson distribution to a file of numbers.
    FitJohnson {
        /// Whitespace- or comma-separated sample values.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: FitMethod,
        /// Percentile spacing for percentile matching.
        #[arg(long, default_value_t = DEFAULT_Z)]
        z: f64,
        /// Write the parameters here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_method(cfg: &RunConfig, name: &str) -> Result<MethodSpec> {
    let mut all = vec![cfg.benchmark.clone()];
    all.extend(cfg.methods.iter().cloned());
    let ids = unique_ids(&all);
    if let Some(i) = ids.iter().position(|id| id == name) {
        return Ok(all[i].clone());
    }
    let tag = |m: &MethodSpec| serde_json::to_value(m).ok().and_then(|v| v["method"].as_str().map(String::from));
    if let Some(m) = all.iter().find(|m| tag(m).as_deref() == Some(name)) {
        return Ok(m.clone());
    }
    let spec: MethodSpec = serde_json::from_value(serde_json::json!({ "method": name }))
        .map_err(|_| Error::config("method", format!("unknown method '{name}'; configured ids: {}", ids.join(", "))))?;
    spec.validate()?;
    Ok(spec)
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let dir = OutputDir::create(&cfg.out_dir)?;
    let mut manifest = Manifest::new("simulate", cfg);
    dir.write_manifest(&manifest)?;
    let outer = simulate_for(cfg)?;
    let path = dir.path("paths.csv");
    write_paths(&outer, &path)?;
    manifest.status = RunStatus::Complete;
    dir.write_manifest(&manifest)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn dim(cfg: &RunConfig, name: &str) -> Result<()> {
    let method = resolve_method(cfg, name)?;
    let dir = OutputDir::create(&cfg.out_dir)?;
    let mut manifest = Manifest::new(&format!("dim {}", method.id()), cfg);
    dir.write_manifest(&manifest)?;
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
    let result = if cfg.write_im_cross {
        compute_dim_crosses(&scn, &method, cfg.alpha, &t_indices).map(|(c, x)| (c, Some(x)))
    } else {
        compute_dim(&scn, &method, cfg.alpha, &t_indices).map(|c| (c, None))
    };
    match result {
        Ok((curve, crosses)) => {
            dir.write_dim_curves(&[&curve])?;
            if let Some(x) = crosses {
                dir.write_im_cross(&[(curve.method_id.clone(), x)])?;
            }
            for w in &curve.warnings {
                eprintln!("warning: {w}");
            }
            manifest.status = RunStatus::Complete;
            dir.write_manifest(&manifest)?;
            eprintln!("{}: {} times in {:.3}s", curve.method_id, curve.len(), curve.wall_time_total);
            Ok(())
        }
        Err(e) => {
            manifest.status = RunStatus::Partial;
            manifest.failures.push(format!("{}: {e}", method.id()));
            dir.write_manifest(&manifest)?;
            Err(e)
        }
    }
}

fn compare(cfg: &RunConfig) -> Result<()> {
    let dir = OutputDir::create(&cfg.out_dir)?;
    let mut manifest = Manifest::new("compare", cfg);
    dir.write_manifest(&manifest)?;
    let run = match run_benchmark(cfg) {
        Ok(run) => run,
        Err(e) => {
            manifest.status = RunStatus::Partial;
            manifest.failures.push(format!("{}: {e}", cfg.benchmark.id()));
            dir.write_manifest(&manifest)?;
            return Err(e);
        }
    };
    let manifest = emit(cfg, &run, &cfg.out_dir)?;
    println!("{:<28} {:>12} {:>12} {:>10}", "method", "rmse_abs", "rmse_rel", "time_s");
    println!("{:<28} {:>12} {:>12} {:>10.3}", run.report.benchmark_id, "-", "-", run.report.benchmark_time);
    for r in &run.report.rows {
        match (&r.error, r.rmse_abs, r.rmse_rel) {
            (None, Some(a), Some(b)) => {
                println!("{:<28} {:>12.4e} {:>12.4e} {:>10.3}", r.method_id, a, b, r.time_mean)
            }
            (e, _, _) => println!("{:<28} error: {}", r.method_id, e.as_deref().unwrap_or("")),
        }
    }
    if manifest.status == RunStatus::Partial {
        return Err(Error::Degenerate(format!("{} method(s) failed", manifest.failures.len())));
    }
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Parse { path: path.to_path_buf(), msg: format!("'{s}': {e}") }))
        .collect()
}

fn fit_johnson(input: &Path, method: FitMethod, z: f64, out: Option<&Path>) -> Result<()> {
    let samples = read_samples(input)?;
    let params = match method {
        FitMethod::Moments => fit_moments_default(&MomentSet::from_samples(&samples)?)?,
        FitMethod::Percentile => fit_percentiles_samples(&samples, z)?,
    };
    let json = serde_json::to_string_pretty(&params).expect("params serialize") + "\n";
    match out {
        Some(p) => std::fs::write(p, json).map_err(|e| Error::io(p, e)),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => simulate(&c.load()?),
        Command::Dim { common, method } => dim(&common.load()?, &method),
        Command::Compare(c) => compare(&c.load()?),
        Command::FitJohnson { input, method, z, out } => fit_johnson(&input, method, z, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
