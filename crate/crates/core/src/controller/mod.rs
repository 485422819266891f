//! The PPC Planner, the Simulator-side safety filter and the stiffness schedule.
//!
//! One control step follows the message order of the Planner/Simulator pair:
//! the Simulator samples the oracle, fits the density and sends the score and
//! `β_t`; the Planner descends the free energy; the Simulator retracts the
//! candidate into the learned level set if needed.

mod cost;
mod filter;
mod planner;
mod ppc;
mod schedule;

pub use cost::{CostModel, L_C};
pub use filter::{safety_filter, FilterReport};
pub use planner::{plan, PlanOutcome};
pub use ppc::{plan_and_filter, stride_subset, BetaMode, DensityMode, PlannerConfig, PpcController, PpcState};
pub use schedule::{beta_schedule, step_size};

use crate::env::{Context, EnvState};
use crate::rng::Rng;
use crate::Vec2;

/// What a controller sees at a step.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub state: &'a EnvState,
    pub context: Option<&'a Context>,
}

/// Per-step internals reported by a controller. Fields a controller does not
/// compute stay `NaN`/`false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub beta: f64,
    pub beta_star: f64,
    pub kappa: f64,
    pub lambda_max: f64,
    pub r_alpha: f64,
    pub alpha: f64,
    pub g_c: f64,
    pub density_peak: Option<Vec2>,
    pub filter_active: bool,
    pub filter_iterations: usize,
    pub filter_failed: bool,
    pub planner_underflow: bool,
    pub kappa_floor: bool,
    /// The oracle could not produce samples (or the baseline had no admissible action).
    pub blocked: bool,
    /// A baseline fell back from its primary rule (infeasible QP, no
    /// feasible candidate or grid cell).
    pub fallback: bool,
    pub samples: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            beta: f64::NAN,
            beta_star: f64::NAN,
            kappa: f64::NAN,
            lambda_max: f64::NAN,
            r_alpha: f64::NAN,
            alpha: f64::NAN,
            g_c: f64::NAN,
            density_peak: None,
            filter_active: false,
            filter_iterations: 0,
            filter_failed: false,
            planner_underflow: false,
            kappa_floor: false,
            blocked: false,
            fallback: false,
            samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Vec2,
    pub diagnostics: Diagnostics,
}

impl Decision {
    pub fn plain(action: Vec2) -> Self {
        Self { action, diagnostics: Diagnostics::default() }
    }
}

/// Common per-step interface of PPC and the baselines.
pub trait Controller: Send {
    fn name(&self) -> &str;
    fn act(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Decision;
}
