//! Run configuration: a flat JSON document naming the model, instrument,
//! grid, estimators and output location. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MethodSpec;
use crate::models::{Instrument, Model};
use crate::simulation::{mpor_grid, InclusionRule};

fn default_alpha() -> f64 {
    0.01
}

fn default_every() -> usize {
    1
}

fn default_repeats() -> usize {
    3
}

fn default_benchmark() -> MethodSpec {
    MethodSpec::NestedMc { n_inner: 500 }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub instrument: Instrument,
    pub n_outer: usize,
    /// Margin period of risk in years; the maturity must be a multiple.
    pub delta: f64,
    /// DIM is evaluated at every `dim_every`-th margin-period grid point.
    #[serde(default = "default_every")]
    pub dim_every: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub rule: InclusionRule,
    #[serde(default = "default_benchmark")]
    pub benchmark: MethodSpec,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Also write per-path margins for every method and time.
    #[serde(default)]
    pub write_im_cross: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub n_outer: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config("(document)", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = o.alpha {
            self.alpha = a;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(n) = o.n_outer {
            self.n_outer = n;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", format!("must satisfy 0 < alpha < 1, got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::config("delta", format!("must be > 0, got {}", self.delta)));
        }
        if self.n_outer < 100 {
            return Err(Error::config("n_outer", format!("must be >= 100, got {}", self.n_outer)));
        }
        if self.dim_every == 0 {
            return Err(Error::config("dim_every", "must be >= 1"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "must be >= 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be >= 1"));
        }
        self.model.validate().map_err(|e| Error::config("model", e.to_string()))?;
        self.instrument.validate().map_err(|e| Error::config("instrument", e.to_string()))?;
        mpor_grid(self.instrument.maturity(), self.delta).map_err(|e| Error::config("delta", e.to_string()))?;
        self.benchmark.validate().map_err(|e| prefix("benchmark", e))?;
        for (i, m) in self.methods.iter().enumerate() {
            m.validate().map_err(|e| prefix(&format!("methods[{i}]"), e))?;
        }
        Ok(())
    }

    /// Margin-period grid from zero to maturity.
    pub fn grid(&self) -> Result<Vec<f64>> {
        mpor_grid(self.instrument.maturity(), self.delta)
    }

    /// Grid indices at which DIM is evaluated: every `dim_every`-th point
    /// whose margin period ends by maturity.
    pub fn dim_indices(&self) -> Result<Vec<usize>> {
        let n = self.grid()?.len();
        Ok((0..n - 1).step_by(self.dim_every).collect())
    }
}

fn prefix(scope: &str, e: Error) -> Error {
    match e {
        Error::Config { key, msg } => Error::config(format!("{scope}.{key}"), msg),
        other => Error::config(scope, other.to_string()),
    }
}

/// Reads, overrides and validates a configuration file.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), msg: e.to_string() })?;
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}
