//! Numerical checks of the analytical guarantees on synthetic scenes.
//!
//! Every check evaluates both sides of an inequality or identity by brute
//! force on a grid (or at explicit probes) and returns a [`CheckReport`].
//! Scenes that violate a check's hypothesis are rejected with a
//! [`CheckError`] instead of being reported as failures.

mod analytic;
mod landscape;
mod level_set;
mod mixture;
mod scene;
mod suite;

pub use analytic::{check_fisher_consistency, check_score_consistency, check_single_gaussian, random_kde};
pub use landscape::{
    basin, check_comparator_sensitivity, check_contraction, check_critical_stiffness, check_gibbs_map, check_landscape,
    critical_stiffness, refine_minimizer, Basin, StiffnessGeometry, CONTRACTION_STARTS,
};
pub use level_set::check_level_set_stability;
pub use mixture::{check_ctx_gap, check_mixture_hessian, random_mixture};
pub use scene::{covering_grid, GridSpec, MixtureEval, MixtureScene, SyntheticScene};
pub use suite::{run_all_checks, SuiteEntry};

use thiserror::Error;

use crate::linalg::linear_fit;

/// A scene the check cannot be applied to.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("superlevel set around the minimizer holds {modes} density modes")]
    MultiBasin { modes: usize },
    #[error("barrier curvature {kappa} is not positive on the basin")]
    NotLogConcave { kappa: f64 },
    #[error("sup-norm gap {gap} is not below alpha {alpha}")]
    SmallnessViolated { gap: f64, alpha: f64 },
    #[error("conditional Hessians differ across contexts by {spread}")]
    IdentifiabilityViolated { spread: f64 },
    #[error("scenes differ in {0}")]
    SceneMismatch(String),
    #[error("grid quadrature of Z changed by {change} under refinement")]
    QuadratureNotConverged { change: f64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Outcome of one check. `passed` holds exactly when
/// `worst_violation <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Largest `lhs - rhs` over all probed inequalities (negative means slack).
    pub worst_violation: f64,
    pub tolerance: f64,
    pub probes: usize,
    pub parameters: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

impl CheckReport {
    pub fn new(name: &str, worst_violation: f64, tolerance: f64, probes: usize) -> Self {
        Self {
            name: name.to_string(),
            passed: worst_violation <= tolerance,
            worst_violation,
            tolerance,
            probes,
            parameters: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.parameters.push((key.into(), value));
        self
    }

    pub fn flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Single-line `key=value` record.
    pub fn to_record(&self) -> String {
        let mut s = format!(
            "check={} passed={} worst={:.6e} tol={:.3e} probes={}",
            self.name, self.passed, self.worst_violation, self.tolerance, self.probes
        );
        for (k, v) in &self.parameters {
            s.push_str(&format!(" {k}={v:.6e}"));
        }
        if !self.flags.is_empty() {
            s.push_str(&format!(" flags={}", self.flags.join(",")));
        }
        s
    }
}

/// Maximum of `values`, or `0` when there are none.
pub(crate) fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    let w = values.into_iter().fold(f64::NEG_INFINITY, f64::max);
    if w == f64::NEG_INFINITY {
        0.0
    } else {
        w
    }
}

/// Least-squares slope and intercept of `ln error` against `ln N`.
pub fn fit_rate_exponent(series: &[(f64, f64)]) -> Result<(f64, f64), String> {
    if series.len() < 4 {
        return Err(format!("need at least 4 points, got {}", series.len()));
    }
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("sample sizes must be strictly increasing".into());
    }
    if series.iter().any(|(n, e)| !(*n > 0.0) || !(*e > 0.0)) {
        return Err("sample sizes and errors must be positive".into());
    }
    let x: Vec<f64> = series.iter().map(|(n, _)| n.ln()).collect();
    let y: Vec<f64> = series.iter().map(|(_, e)| e.ln()).collect();
    let (slope, intercept) = linear_fit(&x, &y);
    Ok((slope, intercept))
}
