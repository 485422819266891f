use super::{
    beta_schedule, plan, safety_filter, step_size, Controller, CostModel, Decision, Diagnostics, Observation, L_C,
};
use crate::density::{
    estimate_curvature_from, probe_densities, CondKdeModel, CurvatureEstimate, CurvatureRule, KdeModel, SampleBuffer,
};
use crate::env::{sample_feasible, Context};
use crate::linalg::percentile;
use crate::rng::Rng;
use crate::Vec2;

/// Tunables of the PPC Planner/Simulator pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub eta0: f64,
    pub inner_steps_k: usize,
    pub schedule_c: f64,
    pub retraction_steps_j: usize,
    /// `η_r = retraction_factor · h²`.
    pub retraction_factor: f64,
    pub alpha_percentile: f64,
    /// Oracle samples drawn per step.
    pub samples_per_step: usize,
    /// Buffer window of the marginal model, in steps.
    pub window_steps: u64,
    /// Buffer window of the conditional model, in steps.
    pub context_window_steps: u64,
    /// At most this many of the step's samples serve as level-set probes.
    pub max_probes: usize,
    pub curvature_rule: CurvatureRule,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            eta0: 0.02,
            inner_steps_k: 50,
            schedule_c: 10.0,
            retraction_steps_j: 25,
            retraction_factor: 0.5,
            alpha_percentile: 10.0,
            samples_per_step: 300,
            window_steps: 5,
            context_window_steps: 1000,
            max_probes: 300,
            curvature_rule: CurvatureRule::BoundaryNormal,
        }
    }
}

/// How `β_t` is chosen each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    /// `β*(1 + C/√N_t)`.
    Scheduled,
    /// `m · β*` with the schedule disabled.
    Multiple(f64),
    /// A constant.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    Marginal,
    /// Condition on the observation's context, falling back to the marginal
    /// fit of the step's samples when the context underflows.
    Contextual,
}

/// Warm start, cumulative sample count and last stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct PpcState {
    pub u_prev: Vec2,
    pub n_cumulative: u64,
    pub beta_t: f64,
    pub last_filter_active: bool,
}

impl Default for PpcState {
    fn default() -> Self {
        Self { u_prev: Vec2::zeros(), n_cumulative: 0, beta_t: f64::NAN, last_filter_active: false }
    }
}

/// Plan on `model` from a warm start and retract the result.
///
/// The warm start is replaced by the density peak when it lies outside the
/// current level set, so descent always begins inside `{p̂ ≥ α}`.
pub fn plan_and_filter(
    model: &KdeModel,
    est: &CurvatureEstimate,
    beta: f64,
    cost: &CostModel,
    u_warm: Vec2,
    config: &PlannerConfig,
) -> Decision {
    let eta = step_size(L_C, beta, est.lambda_max, config.eta0);
    let warm = if model.density(&u_warm) >= est.alpha { u_warm } else { est.density_peak };
    let planned = plan(cost, |u| model.score(u), beta, eta, config.inner_steps_k, warm);
    let h = model.bandwidth();
    let eta_r = config.retraction_factor * h * h;
    let (action, report) =
        safety_filter(model, est.alpha, planned.action, config.retraction_steps_j, eta_r, cost.u_max);
    Decision {
        action,
        diagnostics: Diagnostics {
            beta,
            beta_star: est.beta_star,
            kappa: est.kappa,
            lambda_max: est.lambda_max,
            r_alpha: est.r_alpha,
            alpha: est.alpha,
            g_c: cost.g_c(),
            density_peak: Some(est.density_peak),
            filter_active: report.active,
            filter_iterations: report.iterations,
            filter_failed: report.exhausted,
            planner_underflow: planned.underflow,
            kappa_floor: est.floor_engaged,
            blocked: false,
            fallback: false,
            samples: 0,
        },
    }
}

/// Evenly strided subset of at most `max` points.
pub fn stride_subset(points: &[Vec2], max: usize) -> Vec<Vec2> {
    if points.len() <= max || max == 0 {
        return points.to_vec();
    }
    (0..max).map(|i| points[i * points.len() / max]).collect()
}

/// Online PPC: oracle sampling, density fit, curvature-driven stiffness,
/// planning and retraction at every step.
#[derive(Debug, Clone)]
pub struct PpcController {
    name: String,
    pub config: PlannerConfig,
    pub beta_mode: BetaMode,
    pub density_mode: DensityMode,
    buffer: SampleBuffer,
    pub state: PpcState,
}

impl PpcController {
    pub fn new(name: impl Into<String>, config: PlannerConfig, beta_mode: BetaMode, density_mode: DensityMode) -> Self {
        let window = match density_mode {
            DensityMode::Marginal => config.window_steps,
            DensityMode::Contextual => config.context_window_steps,
        };
        let buffer = SampleBuffer::new(window, config.samples_per_step);
        Self { name: name.into(), config, beta_mode, density_mode, buffer, state: PpcState::default() }
    }

    pub fn buffer(&self) -> &SampleBuffer {
        &self.buffer
    }

    fn fit(&self, obs: &Observation<'_>, fresh: &[Vec2]) -> KdeModel {
        let s = obs.state;
        let fallback = || KdeModel::fit(fresh.to_vec()).expect("fresh samples are non-empty");
        match (self.density_mode, obs.context) {
            (DensityMode::Contextual, Some(xi)) => CondKdeModel::fit(&self.buffer, s.q, s.u_max)
                .and_then(|c| c.conditional_model(xi))
                .unwrap_or_else(|_| fallback()),
            _ => KdeModel::fit_marginal(&self.buffer, s.q, s.u_max).unwrap_or_else(|_| fallback()),
        }
    }

    fn beta(&self, beta_star: f64) -> f64 {
        match self.beta_mode {
            BetaMode::Scheduled => beta_schedule(beta_star, self.config.schedule_c, self.state.n_cumulative),
            BetaMode::Multiple(m) => m * beta_star,
            BetaMode::Fixed(b) => b,
        }
    }

    /// One full Planner/Simulator exchange.
    pub fn step(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Decision {
        let s = obs.state;
        let fresh = match sample_feasible(s, self.config.samples_per_step, rng) {
            Ok(samples) if !samples.is_empty() => samples,
            _ => return self.blocked(),
        };
        let context: Option<Context> = obs.context.copied();
        self.buffer.push_step(s.t, s.q, &fresh, context);
        self.state.n_cumulative += fresh.len() as u64;

        let model = self.fit(obs, &fresh);
        let probes = stride_subset(&fresh, self.config.max_probes);
        let densities = probe_densities(&model, &probes);
        let alpha = percentile(&densities, self.config.alpha_percentile);
        let cost = CostModel::new(s.q, s.goal, s.u_max);
        let rule = self.config.curvature_rule;
        let Ok(est) = estimate_curvature_from(&model, alpha, cost.g_c(), &probes, &densities, rule) else {
            return self.blocked();
        };
        let beta = self.beta(est.beta_star);
        let mut decision = plan_and_filter(&model, &est, beta, &cost, self.state.u_prev, &self.config);
        decision.diagnostics.samples = fresh.len();
        self.state.u_prev = decision.action;
        self.state.beta_t = beta;
        self.state.last_filter_active = decision.diagnostics.filter_active;
        decision
    }

    fn blocked(&mut self) -> Decision {
        self.state.u_prev = Vec2::zeros();
        let mut d = Decision::plain(Vec2::zeros());
        d.diagnostics.blocked = true;
        d
    }
}

impl Controller for PpcController {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Decision {
        self.step(obs, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, EnvState};
    use crate::rng::{self, Stream};

    fn open_state() -> EnvState {
        let mut s = EnvState::new(&EnvConfig { n_obstacles: 0, ..EnvConfig::default() }, 0);
        s.q = Vec2::new(5.0, 5.0);
        s.goal = Vec2::new(9.0, 8.0);
        s
    }

    #[test]
    fn step_is_deterministic() {
        let s = open_state();
        let obs = Observation { state: &s, context: None };
        let run = || {
            let mut c = PpcController::new("ppc", PlannerConfig::default(), BetaMode::Scheduled, DensityMode::Marginal);
            c.step(&obs, &mut rng::stream(4, Stream::Controller))
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn open_field_heads_to_goal() {
        let s = open_state();
        let obs = Observation { state: &s, context: None };
        let mut c = PpcController::new("ppc", PlannerConfig::default(), BetaMode::Scheduled, DensityMode::Marginal);
        let d = c.step(&obs, &mut rng::stream(4, Stream::Controller));
        let target = crate::linalg::clip_to_disk(s.goal - s.q, 1.0);
        assert!(d.diagnostics.beta > d.diagnostics.beta_star);
        assert!(d.action.norm() <= 1.0 + 1e-12);
        assert!(d.action.dot(&target) > 0.0, "action {:?}", d.action);
    }

    #[test]
    fn stride_subset_keeps_bounds() {
        let pts: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 0.0)).collect();
        assert_eq!(stride_subset(&pts, 20).len(), 10);
        let sub = stride_subset(&pts, 4);
        assert_eq!(sub.len(), 4);
        assert_eq!(sub[0].x, 0.0);
    }
}
