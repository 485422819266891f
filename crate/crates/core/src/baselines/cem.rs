use rand_distr::{Distribution, StandardNormal};

use crate::controller::{Controller, CostModel, Decision, Observation};
use crate::density::{probe_densities, KdeModel};
use crate::env::sample_feasible;
use crate::linalg::{clip_to_disk, percentile};
use crate::rng::Rng;
use crate::Vec2;

/// Cross-entropy search hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CemConfig {
    pub n_candidates: usize,
    pub elite_fraction: f64,
    pub iterations: usize,
    pub init_std: f64,
    /// Oracle samples per step for the density model.
    pub samples_per_step: usize,
    pub alpha_percentile: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            n_candidates: 300,
            elite_fraction: 0.1,
            iterations: 5,
            init_std: 0.5,
            samples_per_step: 300,
            alpha_percentile: 10.0,
        }
    }
}

impl CemConfig {
    pub fn elite_count(&self) -> usize {
        ((self.n_candidates as f64 * self.elite_fraction).round() as usize).max(1)
    }
}

/// Result of a cross-entropy search.
#[derive(Debug, Clone, PartialEq)]
pub struct CemOutcome {
    pub action: Vec2,
    /// No candidate passed the feasibility test; `action` is the final
    /// proposal mean clipped to the disk.
    pub no_feasible: bool,
    /// Proposal mean after each refit.
    pub means: Vec<Vec2>,
}

/// Minimize `cost` over candidates accepted by `feasible`, refitting a
/// diagonal Gaussian proposal to the elite feasible candidates each round.
pub fn cem_search(
    cost: impl Fn(&Vec2) -> f64,
    feasible: impl Fn(&Vec2) -> bool,
    u_max: f64,
    cfg: &CemConfig,
    rng: &mut Rng,
) -> CemOutcome {
    let mut mean = Vec2::zeros();
    let mut std = Vec2::repeat(cfg.init_std);
    let mut best: Option<(f64, Vec2)> = None;
    let mut means = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let mut scored: Vec<(f64, Vec2)> = Vec::with_capacity(cfg.n_candidates);
        for _ in 0..cfg.n_candidates {
            let z = Vec2::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
            let u = clip_to_disk(mean + z.component_mul(&std), u_max);
            if feasible(&u) {
                scored.push((cost(&u), u));
            }
        }
        // Stable sort keeps first-seen order among equal costs.
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(&(c, u)) = scored.first() {
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, u));
            }
            let elites = &scored[..cfg.elite_count().min(scored.len())];
            let n = elites.len() as f64;
            mean = elites.iter().map(|e| e.1).sum::<Vec2>() / n;
            let var = elites.iter().map(|e| (e.1 - mean).component_mul(&(e.1 - mean))).sum::<Vec2>() / n;
            std = var.map(|v| v.sqrt().max(1e-3));
        }
        means.push(mean);
    }
    match best {
        Some((_, action)) => CemOutcome { action, no_feasible: false, means },
        None => CemOutcome { action: clip_to_disk(mean, u_max), no_feasible: true, means },
    }
}

/// Sampling-based MPC baseline: same oracle budget as PPC, with the step's
/// KDE level set as the feasibility test.
#[derive(Debug, Clone, Default)]
pub struct CemController {
    pub config: CemConfig,
}

impl Controller for CemController {
    fn name(&self) -> &str {
        "cem"
    }

    fn act(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Decision {
        let s = obs.state;
        let samples = match sample_feasible(s, self.config.samples_per_step, rng) {
            Ok(v) if !v.is_empty() => v,
            _ => {
                let mut d = Decision::plain(Vec2::zeros());
                d.diagnostics.blocked = true;
                return d;
            }
        };
        let n = samples.len();
        let model = KdeModel::fit(samples.clone()).expect("non-empty samples");
        let alpha = percentile(&probe_densities(&model, &samples), self.config.alpha_percentile);
        let cost = CostModel::new(s.q, s.goal, s.u_max);
        let out = cem_search(|u| cost.value(u), |u| model.density(u) >= alpha, s.u_max, &self.config, rng);
        let mut d = Decision::plain(out.action);
        d.diagnostics.alpha = alpha;
        d.diagnostics.fallback = out.no_feasible;
        d.diagnostics.samples = n;
        d
    }
}
