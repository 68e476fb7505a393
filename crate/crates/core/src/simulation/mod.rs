//! Outer and inner path generation, margin-period value changes and the
//! sample utilities shared by the estimators.

pub mod inner;
pub mod io;
pub mod paths;
pub mod quantile;
pub mod rng;

pub use inner::{
    pseudo_inner, pseudo_inner_indexed, simulate_inner, Anchor, InnerEngine, InnerSampleSet, Key, KeyIndex, Origin,
};
pub use io::{read_paths, write_paths};
pub use paths::{delta_v, mpor_grid, simulate_outer, DeltaVCross, InclusionRule, OuterPathSet};
pub use quantile::{empirical_quantile, quantile_in_place, sorted_quantile};
pub use rng::{substream, Purpose};
