use super::qp::{max_feasible_scale, project, LinearConstraint, QpOutcome};
use crate::controller::{Controller, Decision, Observation};
use crate::env::{EnvState, ObstacleSpec};
use crate::linalg::clip_to_disk;
use crate::rng::Rng;
use crate::Vec2;

/// Class-K coefficient of the CBF-QP baseline.
pub const CBF_GAMMA: f64 = 0.5;

/// A disk the robot must keep out of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    pub center: Vec2,
    /// Radius including the safety margin.
    pub radius: f64,
}

/// Nominal action `clip(g - q)`.
pub fn nominal_action(state: &EnvState) -> Vec2 {
    clip_to_disk(state.goal - state.q, state.u_max)
}

/// Linearized discrete CBF `h(q) + ∇h(q)·u ≥ (1-γ) h(q)` for
/// `h(q) = ‖q - c‖² - R²`.
pub fn barrier_constraint(q: Vec2, barrier: &Barrier, gamma: f64) -> LinearConstraint {
    let d = q - barrier.center;
    let h = d.norm_squared() - barrier.radius * barrier.radius;
    LinearConstraint { a: 2.0 * d, b: -gamma * h }
}

/// Keep `q + u` inside the workspace.
pub fn workspace_constraints(state: &EnvState) -> [LinearConstraint; 4] {
    let (lo, hi, q) = (state.bounds.min, state.bounds.max, state.q);
    [
        LinearConstraint { a: Vec2::new(1.0, 0.0), b: lo.x - q.x },
        LinearConstraint { a: Vec2::new(-1.0, 0.0), b: q.x - hi.x },
        LinearConstraint { a: Vec2::new(0.0, 1.0), b: lo.y - q.y },
        LinearConstraint { a: Vec2::new(0.0, -1.0), b: q.y - hi.y },
    ]
}

/// Outcome of a safety-filter QP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpAction {
    pub action: Vec2,
    /// The QP was infeasible and the scaled-nominal fallback was used.
    pub fallback: bool,
}

/// Project `u_nom` onto the constraints and the `u_max` disk. When that set
/// is empty, return `s · u_nom` with the largest admissible `s ∈ [0, 1]`,
/// else zero.
pub fn filter_nominal(u_nom: Vec2, constraints: &[LinearConstraint], u_max: f64) -> QpAction {
    match project(u_nom, constraints, u_max) {
        QpOutcome::Solved(action) => QpAction { action, fallback: false },
        QpOutcome::Infeasible => {
            let s = max_feasible_scale(&u_nom, constraints).unwrap_or(0.0);
            QpAction { action: u_nom * s, fallback: true }
        }
    }
}

/// CBF-QP against the true obstacle positions at `t + 1`.
pub fn cbf_qp_action(state: &EnvState, gamma: f64) -> QpAction {
    let t_next = (state.t + 1) as f64;
    let mut constraints: Vec<LinearConstraint> = state
        .obstacles
        .iter()
        .map(|o| {
            let b = Barrier { center: o.position(t_next, &state.bounds), radius: o.radius + state.d_safe };
            barrier_constraint(state.q, &b, gamma)
        })
        .collect();
    constraints.extend(workspace_constraints(state));
    filter_nominal(nominal_action(state), &constraints, state.u_max)
}

fn qp_decision(qp: QpAction) -> Decision {
    let mut d = Decision::plain(qp.action);
    d.diagnostics.fallback = qp.fallback;
    d
}

/// Oracle-information CBF-QP baseline.
#[derive(Debug, Clone)]
pub struct CbfQpController {
    pub gamma: f64,
}

impl Default for CbfQpController {
    fn default() -> Self {
        Self { gamma: CBF_GAMMA }
    }
}

impl Controller for CbfQpController {
    fn name(&self) -> &str {
        "cbf_qp"
    }

    fn act(&mut self, obs: &Observation<'_>, _rng: &mut Rng) -> Decision {
        qp_decision(cbf_qp_action(obs.state, self.gamma))
    }
}

/// Static disks covering each obstacle's path over steps `t0..=t0 + horizon`:
/// centered at `o_k(t0)` with radius `r_k + d_safe + max_t ‖o_k(t) - o_k(t0)‖`.
pub fn swept_barriers(state: &EnvState, t0: u64, horizon: u64) -> Vec<Barrier> {
    state.obstacles.iter().map(|o| swept_barrier(o, state, t0, horizon)).collect()
}

fn swept_barrier(o: &ObstacleSpec, state: &EnvState, t0: u64, horizon: u64) -> Barrier {
    let start = o.position(t0 as f64, &state.bounds);
    let sweep = (t0..=t0 + horizon).map(|t| (o.position(t as f64, &state.bounds) - start).norm()).fold(0.0, f64::max);
    Barrier { center: start, radius: o.radius + state.d_safe + sweep }
}

/// CBF-QP with `γ = 1` against fixed inflated disks.
pub fn static_conservative_action(state: &EnvState, barriers: &[Barrier]) -> QpAction {
    let mut constraints: Vec<LinearConstraint> = barriers.iter().map(|b| barrier_constraint(state.q, b, 1.0)).collect();
    constraints.extend(workspace_constraints(state));
    filter_nominal(nominal_action(state), &constraints, state.u_max)
}

/// Treats every obstacle as a static disk covering its whole path over the
/// episode. The disks are recomputed from the current step whenever the
/// obstacle set changes.
#[derive(Debug, Clone)]
pub struct StaticConservativeController {
    horizon: u64,
    cached: Option<(Vec<ObstacleSpec>, Vec<Barrier>)>,
}

impl StaticConservativeController {
    /// `horizon` is the episode length in steps.
    pub fn new(horizon: u64) -> Self {
        Self { horizon, cached: None }
    }

    pub fn barriers(&self) -> Option<&[Barrier]> {
        self.cached.as_ref().map(|(_, b)| b.as_slice())
    }
}

impl Controller for StaticConservativeController {
    fn name(&self) -> &str {
        "static_conservative"
    }

    fn act(&mut self, obs: &Observation<'_>, _rng: &mut Rng) -> Decision {
        let s = obs.state;
        let stale = self.cached.as_ref().is_none_or(|(specs, _)| *specs != s.obstacles);
        if stale {
            let remaining = self.horizon.saturating_sub(s.t);
            self.cached = Some((s.obstacles.clone(), swept_barriers(s, s.t, remaining)));
        }
        let (_, barriers) = self.cached.as_ref().expect("just filled");
        qp_decision(static_conservative_action(s, barriers))
    }
}
