use crate::controller::{beta_schedule, plan_and_filter, Controller, CostModel, Decision, Observation, PlannerConfig};
use crate::density::{estimate_curvature_from, probe_densities, CondKdeModel, CurvatureEstimate, KdeModel};
use crate::env::{render_context, sample_feasible, EnvState, Mode, ModeLayouts, Projection};
use crate::linalg::percentile;
use crate::rng::Rng;
use crate::Vec2;

/// Frozen action-frame sample count of the offline DRGD baseline.
pub const OFFLINE_SAMPLES: usize = 500;

fn level_set(model: &KdeModel, probes: &[Vec2], cost: &CostModel, config: &PlannerConfig) -> Option<CurvatureEstimate> {
    let probes = crate::controller::stride_subset(probes, config.max_probes);
    let densities = probe_densities(model, &probes);
    let alpha = percentile(&densities, config.alpha_percentile);
    estimate_curvature_from(model, alpha, cost.g_c(), &probes, &densities, config.curvature_rule).ok()
}

#[derive(Debug, Clone)]
struct Frozen {
    model: KdeModel,
    est: CurvatureEstimate,
    beta: f64,
}

/// PPC's planner and filter on a density fitted once, at the first step, and
/// never updated. The samples stay in the action frame of that step.
#[derive(Debug, Clone)]
pub struct OfflineDrgdController {
    pub config: PlannerConfig,
    pub n_samples: usize,
    frozen: Option<Frozen>,
    u_prev: Vec2,
}

impl OfflineDrgdController {
    pub fn new(config: PlannerConfig, n_samples: usize) -> Self {
        Self { config, n_samples, frozen: None, u_prev: Vec2::zeros() }
    }

    pub fn model(&self) -> Option<&KdeModel> {
        self.frozen.as_ref().map(|f| &f.model)
    }

    fn freeze(&mut self, s: &EnvState, rng: &mut Rng) -> Option<Frozen> {
        let samples = sample_feasible(s, self.n_samples, rng).ok().filter(|v| !v.is_empty())?;
        let model = KdeModel::fit(samples.clone()).ok()?;
        let cost = CostModel::new(s.q, s.goal, s.u_max);
        let est = level_set(&model, &samples, &cost, &self.config)?;
        let beta = beta_schedule(est.beta_star, self.config.schedule_c, samples.len() as u64);
        Some(Frozen { model, est, beta })
    }
}

impl Controller for OfflineDrgdController {
    fn name(&self) -> &str {
        "offline_drgd"
    }

    fn act(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Decision {
        let s = obs.state;
        if self.frozen.is_none() {
            self.frozen = self.freeze(s, rng);
        }
        let Some(f) = &self.frozen else {
            let mut d = Decision::plain(Vec2::zeros());
            d.diagnostics.blocked = true;
            return d;
        };
        let cost = CostModel::new(s.q, s.goal, s.u_max);
        let mut d = plan_and_filter(&f.model, &f.est, f.beta, &cost, self.u_prev, &self.config);
        d.diagnostics.samples = f.model.len();
        self.u_prev = d.action;
        d
    }
}

/// Conditional KDE over a fixed library of per-mode samples collected
/// before the episode: for every mode, `samples_per_mode` oracle draws at
/// the start state with that mode's layout, tagged with its context.
#[derive(Debug, Clone)]
pub struct OfflineContextualController {
    pub config: PlannerConfig,
    model: CondKdeModel,
    n_total: u64,
    u_prev: Vec2,
}

impl OfflineContextualController {
    pub fn pretrain(
        start: &EnvState,
        layouts: &ModeLayouts,
        projection: &Projection,
        samples_per_mode: usize,
        config: PlannerConfig,
        rng: &mut Rng,
    ) -> Self {
        let mut points = Vec::new();
        let mut contexts = Vec::new();
        for mode in Mode::ALL {
            let s = start.set_mode(mode, layouts);
            let xi = render_context(&s, projection).embedding;
            let samples = sample_feasible(&s, samples_per_mode, rng).unwrap_or_default();
            contexts.extend(std::iter::repeat_n(xi, samples.len()));
            points.extend(samples);
        }
        let h_ctx = crate::density::context_bandwidth(&contexts);
        let n_total = points.len() as u64;
        let model = CondKdeModel::new(points, contexts, h_ctx).expect("pretraining produced samples");
        Self { config, model, n_total, u_prev: Vec2::zeros() }
    }

    pub fn library_size(&self) -> usize {
        self.model.len()
    }
}

impl Controller for OfflineContextualController {
    fn name(&self) -> &str {
        "offline_contextual"
    }

    fn act(&mut self, obs: &Observation<'_>, _rng: &mut Rng) -> Decision {
        let s = obs.state;
        let blocked = |this: &mut Self| {
            this.u_prev = Vec2::zeros();
            let mut d = Decision::plain(Vec2::zeros());
            d.diagnostics.blocked = true;
            d
        };
        let Some(xi) = obs.context else { return blocked(self) };
        let model = match self.model.conditional_model(xi) {
            Ok(m) => m,
            Err(_) => match self.model.clone().with_bandwidth_ctx(f64::MAX.sqrt()).conditional_model(xi) {
                Ok(m) => m,
                Err(_) => return blocked(self),
            },
        };
        let cost = CostModel::new(s.q, s.goal, s.u_max);
        let Some(est) = level_set(&model, model.points(), &cost, &self.config) else { return blocked(self) };
        let beta = beta_schedule(est.beta_star, self.config.schedule_c, self.n_total);
        let mut d = plan_and_filter(&model, &est, beta, &cost, self.u_prev, &self.config);
        d.diagnostics.samples = model.len();
        self.u_prev = d.action;
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{BetaMode, DensityMode, PpcController};
    use crate::env::{EnvConfig, ObstacleDistribution};
    use crate::rng::{self, Stream};

    #[test]
    fn matches_ppc_on_first_step() {
        let s = EnvState::new(&EnvConfig::default(), 3);
        let obs = Observation { state: &s, context: None };
        let config = PlannerConfig::default();
        let mut offline = OfflineDrgdController::new(config.clone(), config.samples_per_step);
        let mut ppc = PpcController::new("ppc", config, BetaMode::Scheduled, DensityMode::Marginal);
        let a = offline.act(&obs, &mut rng::stream(3, Stream::Controller));
        let b = ppc.act(&obs, &mut rng::stream(3, Stream::Controller));
        // PPC re-anchors its samples through absolute positions, which costs a few ulps.
        assert!((a.action - b.action).norm() < 1e-12);
    }

    #[test]
    fn frozen_model_size_and_staleness() {
        let mut s = EnvState::new(&EnvConfig::default(), 4);
        let mut c = OfflineDrgdController::new(PlannerConfig::default(), OFFLINE_SAMPLES);
        let mut r = rng::stream(4, Stream::Controller);
        c.act(&Observation { state: &s, context: None }, &mut r);
        let model = c.model().unwrap().clone();
        assert_eq!(model.len(), OFFLINE_SAMPLES);
        for _ in 0..5 {
            let d = c.act(&Observation { state: &s, context: None }, &mut r);
            s = s.step(&d.action);
        }
        assert_eq!(c.model().unwrap(), &model);
    }

    #[test]
    fn contextual_library_has_every_mode() {
        let s = EnvState::new(&EnvConfig::default(), 0);
        let layouts = ModeLayouts::generate(&mut rng::stream(0, Stream::Modes), &ObstacleDistribution::default());
        let projection = Projection::from_rng(&mut rng::stream(0, Stream::Projection));
        let mut r = rng::stream(0, Stream::Controller);
        let mut c =
            OfflineContextualController::pretrain(&s, &layouts, &projection, 200, PlannerConfig::default(), &mut r);
        assert_eq!(c.library_size(), 800);
        let live = s.set_mode(Mode::NorthEast, &layouts);
        let xi = render_context(&live, &projection).embedding;
        let d = c.act(&Observation { state: &live, context: Some(&xi) }, &mut r);
        assert!(!d.diagnostics.blocked);
        assert!(d.action.norm() <= live.u_max + 1e-12);
    }
}
