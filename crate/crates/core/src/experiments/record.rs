use serde::{Deserialize, Serialize};

/// One control step as seen by the ground truth.
///
/// `feasible` is recomputed by the environment's oracle for the manifold the
/// controller targeted; controller-internal quantities are `NaN` when the
/// controller does not produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub q_x: f64,
    pub q_y: f64,
    pub goal_x: f64,
    pub goal_y: f64,
    pub action_x: f64,
    pub action_y: f64,
    pub feasible: bool,
    pub cost: f64,
    pub beta_t: f64,
    pub beta_star: f64,
    pub kappa: f64,
    pub r_alpha: f64,
    pub alpha: f64,
    pub g_c: f64,
    pub peak_x: f64,
    pub peak_y: f64,
    pub filter_active: bool,
    pub filter_iterations: usize,
    pub filter_failed: bool,
    pub blocked: bool,
    pub fallback: bool,
    pub kappa_floor: bool,
    /// Mode index under a mode schedule, empty otherwise.
    pub context_mode: Option<usize>,
    pub wall_clock_ns: u64,
}

/// What happened at an event marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    Reshuffle,
    ModeSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub kind: MarkerKind,
    pub step: u64,
}

/// Identifies an episode within a result set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EpisodeKey {
    pub experiment: u8,
    pub controller: String,
    /// Name of the swept parameter, empty when there is none.
    pub param: String,
    /// Swept value, rendered as text so keys hash exactly.
    pub value: String,
    pub seed: u64,
}

/// Full trace of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub key: EpisodeKey,
    /// Flat `key=value` snapshot of the configuration that produced it.
    pub config: String,
    pub steps: Vec<StepRecord>,
    pub markers: Vec<Marker>,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn marker_steps(&self, kind: MarkerKind) -> Vec<u64> {
        self.markers.iter().filter(|m| m.kind == kind).map(|m| m.step).collect()
    }
}
