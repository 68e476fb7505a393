//! Future value-at-risk and dynamic initial margin on Monte Carlo path sets.
//!
//! Closed-form kernels (pricing, Johnson system, Cornish-Fisher,
//! delta-gamma moments, quantiles, pinball loss) are generic over
//! [`scalar::Real`]; the `*64` aliases below fix the scalar to `f64`.

pub mod config;
pub mod error;
pub mod estimators;
pub mod johnson;
pub mod models;
pub mod pipeline;
pub mod regression;
pub mod scalar;
pub mod simulation;

pub use config::{parse_config, Overrides, RunConfig};
pub use error::{Error, Result};
pub use estimators::{estimate, ImCross, MethodSpec, Scenario};
pub use johnson::{Family, JohnsonParams, KurtosisConvention, MomentSet, PercentileSpread};
pub use models::{Instrument, Model};
pub use pipeline::{compute_dim, emit, rmse, run_benchmark, BenchmarkReport, DimCurve};
pub use regression::{BasisKind, BasisSpec, LinearModel};
pub use simulation::{DeltaVCross, InclusionRule, OuterPathSet};

pub type JohnsonParams64 = JohnsonParams<f64>;
pub type MomentSet64 = MomentSet<f64>;
pub type PercentileSpread64 = PercentileSpread<f64>;
