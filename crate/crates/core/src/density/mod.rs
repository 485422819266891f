//! Gaussian kernel density estimates of the feasible-action distribution.
//!
//! All kernel arithmetic happens in the log domain. A query whose largest
//! log-kernel value falls below [`UNDERFLOW_LOG`] is treated as lying far
//! outside the learned support and reported as an error instead of
//! returning a meaningless score.

mod buffer;
mod conditional;
mod kde;
mod level_set;

pub use buffer::{BufferEntry, SampleBuffer};
pub use conditional::{context_bandwidth, CondKdeModel};
pub use kde::{bandwidth_rule, score_error, spread, KdeEval, KdeModel};
pub use level_set::{
    estimate_curvature, estimate_curvature_from, estimate_curvature_with, find_mode, probe_densities, select_alpha,
    CurvatureEstimate, CurvatureRule, KAPPA_FLOOR, RAY_COUNT,
};

use thiserror::Error;

/// `ln` of the smallest kernel value still treated as informative.
pub const UNDERFLOW_LOG: f64 = -700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("cannot fit a density to an empty sample set")]
    EmptyBuffer,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("every kernel underflows at the query point")]
    DensityUnderflow,
    #[error("query context is too far from every stored context")]
    ContextUnderflow,
    #[error("no probe reaches the level threshold {alpha}")]
    NoInteriorPoint { alpha: f64 },
}
