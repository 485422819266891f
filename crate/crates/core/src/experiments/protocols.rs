use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::episode::{run_episode, ControllerKind, EpisodeSpec, ModeSchedule};
use super::metrics::MetricsSummary;
use super::record::{EpisodeKey, EpisodeLog};
use crate::controller::PlannerConfig;
use crate::density::{bandwidth_rule, score_error, spread, KdeModel};
use crate::env::{sample_feasible, EnvConfig, EnvState};
use crate::linalg::{mean_std, pearson};
use crate::rng::{self, Stream};
use crate::theory::fit_rate_exponent;
use crate::Vec2;

/// Experiment identifiers, `1..=6`.
pub const EXPERIMENTS: [u8; 6] = [1, 2, 3, 4, 5, 6];

/// One per-episode summary line.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: EpisodeKey,
    pub metrics: MetricsSummary,
    /// Exp. 3 only: mean squared score error at this sample budget.
    pub score_error: f64,
    /// Exp. 5 only: total obstacle path length over the episode.
    pub path_length: f64,
}

/// Seed-averaged view of the rows sharing `(controller, param, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub experiment: u8,
    pub controller: String,
    pub param: String,
    pub value: String,
    pub seeds: usize,
    pub safety_mean: f64,
    pub safety_std: f64,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub post_switch_mean: f64,
    pub steady_mean: f64,
    pub safe_cost_ratio_mean: f64,
    pub score_error_mean: f64,
    pub path_length_mean: f64,
    pub step_ns_mean: f64,
}

/// Least-squares fit of `ln error = intercept + exponent · ln N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: u8,
    pub episodes: Vec<EpisodeLog>,
    pub rows: Vec<SummaryRow>,
    /// Exp. 3 score-error rate fit.
    pub rate_fit: Option<RateFit>,
    /// Exp. 5 Pearson correlation of normalized cost and path length
    /// across speeds.
    pub drift_correlation: Option<f64>,
}

fn nan_mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl ExperimentResult {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut groups: Vec<(&str, &str, &str, Vec<&SummaryRow>)> = Vec::new();
        for row in &self.rows {
            let k = &row.key;
            match groups.iter_mut().find(|g| g.0 == k.controller && g.1 == k.param && g.2 == k.value) {
                Some(g) => g.3.push(row),
                None => groups.push((&k.controller, &k.param, &k.value, vec![row])),
            }
        }
        groups
            .into_iter()
            .map(|(controller, param, value, rows)| {
                let (safety_mean, safety_std) =
                    mean_std(&rows.iter().map(|r| r.metrics.safety_rate).collect::<Vec<_>>());
                let costs: Vec<f64> = rows.iter().map(|r| r.metrics.normalized_cost).filter(|c| !c.is_nan()).collect();
                let (cost_mean, cost_std) = if costs.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&costs) };
                AggregateRow {
                    experiment: self.id,
                    controller: controller.to_string(),
                    param: param.to_string(),
                    value: value.to_string(),
                    seeds: rows.len(),
                    safety_mean,
                    safety_std,
                    cost_mean,
                    cost_std,
                    post_switch_mean: nan_mean(rows.iter().map(|r| r.metrics.post_switch_safety)),
                    steady_mean: nan_mean(rows.iter().map(|r| r.metrics.steady_safety)),
                    safe_cost_ratio_mean: nan_mean(rows.iter().map(|r| r.metrics.safe_step_cost_ratio)),
                    score_error_mean: nan_mean(rows.iter().map(|r| r.score_error)),
                    path_length_mean: nan_mean(rows.iter().map(|r| r.path_length)),
                    step_ns_mean: nan_mean(rows.iter().map(|r| r.metrics.mean_step_ns)),
                }
            })
            .collect()
    }

    /// Aggregate row of `controller` at sweep value `value` (empty for none).
    pub fn find(&self, controller: &str, value: &str) -> Option<AggregateRow> {
        self.aggregate().into_iter().find(|a| a.controller == controller && a.value == value)
    }
}

struct Job {
    key: EpisodeKey,
    spec: EpisodeSpec,
    kind: ControllerKind,
    planner: PlannerConfig,
}

/// The first seed keeps the canonical corner start; later seeds draw theirs.
fn env_for(cfg: &ExperimentConfig, seed_index: usize) -> EnvConfig {
    EnvConfig { canonical_start: seed_index == 0, ..cfg.env.clone() }
}

fn key(id: u8, kind: ControllerKind, param: &str, value: String, seed: u64) -> EpisodeKey {
    EpisodeKey { experiment: id, controller: kind.label().to_string(), param: param.to_string(), value, seed }
}

fn run_jobs(cfg: &ExperimentConfig, jobs: Vec<Job>) -> Vec<EpisodeLog> {
    let snapshot = cfg.to_text();
    jobs.into_par_iter()
        .filter(|job| cfg.runs(job.kind.label()))
        .map(|job| {
            let mut controller = job.kind.build(cfg, &job.spec, &job.planner);
            run_episode(&job.spec, controller.as_mut(), job.key, snapshot.clone())
        })
        .collect()
}

/// Per-episode summaries, normalized by the oracle episode with the same
/// seed and sweep value (or the seed's unswept oracle episode).
fn summarize(cfg: &ExperimentConfig, episodes: &[EpisodeLog]) -> Vec<SummaryRow> {
    let oracle_with = |k: &EpisodeKey, value: &str| {
        episodes.iter().find(|e| e.key.controller == "oracle" && e.key.seed == k.seed && e.key.value == value)
    };
    let oracle_of = |k: &EpisodeKey| oracle_with(k, &k.value).or_else(|| oracle_with(k, ""));
    episodes
        .iter()
        .map(|e| SummaryRow {
            key: e.key.clone(),
            metrics: MetricsSummary::compute(e, oracle_of(&e.key), &cfg.metrics),
            score_error: f64::NAN,
            path_length: f64::NAN,
        })
        .collect()
}

fn result(id: u8, episodes: Vec<EpisodeLog>, rows: Vec<SummaryRow>) -> ExperimentResult {
    ExperimentResult { id, episodes, rows, rate_fit: None, drift_correlation: None }
}

/// Main comparison: every controller on matched seeds, with an obstacle
/// reshuffle halfway through.
pub fn run_experiment_1(cfg: &ExperimentConfig) -> ExperimentResult {
    let kinds = [
        ControllerKind::Ppc,
        ControllerKind::OfflineDrgd,
        ControllerKind::CbfQp,
        ControllerKind::GpCbf,
        ControllerKind::Cem,
        ControllerKind::StaticConservative,
        ControllerKind::Oracle,
    ];
    let mut jobs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let spec = reshuffle_spec(cfg, seed, env_for(cfg, i));
        for kind in kinds {
            jobs.push(Job {
                key: key(1, kind, "", String::new(), seed),
                spec: spec.clone(),
                kind,
                planner: cfg.planner.clone(),
            });
        }
    }
    let episodes = run_jobs(cfg, jobs);
    let rows = summarize(cfg, &episodes);
    result(1, episodes, rows)
}

fn reshuffle_spec(cfg: &ExperimentConfig, seed: u64, env: EnvConfig) -> EpisodeSpec {
    EpisodeSpec { env, seed, horizon: cfg.horizon, reshuffle_at: Some(cfg.horizon / 2), modes: None, contextual: false }
}

fn plain_spec(cfg: &ExperimentConfig, seed: u64, env: EnvConfig) -> EpisodeSpec {
    EpisodeSpec { env, seed, horizon: cfg.horizon, reshuffle_at: None, modes: None, contextual: false }
}

/// Stiffness sweep: `β_t = m · β*_t` with the schedule disabled.
pub fn run_experiment_2(cfg: &ExperimentConfig) -> ExperimentResult {
    let mut jobs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let spec = reshuffle_spec(cfg, seed, env_for(cfg, i));
        for &m in &cfg.beta_multiples {
            let kind = ControllerKind::PpcBeta(m);
            jobs.push(Job {
                key: key(2, kind, "beta_multiple", m.to_string(), seed),
                spec: spec.clone(),
                kind,
                planner: cfg.planner.clone(),
            });
        }
        // The environment does not depend on β, so one oracle run per seed serves every multiple.
        let kind = ControllerKind::Oracle;
        jobs.push(Job { key: key(2, kind, "", String::new(), seed), spec, kind, planner: cfg.planner.clone() });
    }
    let episodes = run_jobs(cfg, jobs);
    let rows = summarize(cfg, &episodes);
    result(2, episodes, rows)
}

/// Mean squared score error of an `n`-sample KDE against a reference KDE,
/// both at the reference bandwidth, at the seed's initial state.
pub fn score_errors_at(cfg: &ExperimentConfig, seed: u64, env: &EnvConfig) -> Vec<(usize, f64)> {
    let state = EnvState::new(env, seed);
    let mut r = rng::stream(seed, Stream::Evaluation);
    let Ok(reference_pts) = sample_feasible(&state, cfg.reference_samples, &mut r) else {
        return Vec::new();
    };
    let (sigma, n) = spread(&reference_pts, None);
    let h = bandwidth_rule(sigma, n, 2);
    let reference = KdeModel::new(reference_pts.clone(), h).expect("non-empty reference");
    let eval: Vec<Vec2> = (0..cfg.eval_points)
        .map(|_| {
            let c = reference_pts[r.random_range(0..reference_pts.len())];
            c + Vec2::new(StandardNormal.sample(&mut r), StandardNormal.sample(&mut r)) * h
        })
        .collect();
    cfg.sample_budgets
        .iter()
        .filter_map(|&n| {
            let pts = sample_feasible(&state, n, &mut r).ok()?;
            let model = KdeModel::new(pts, h).ok()?;
            Some((n, score_error(&model, &reference, &eval)))
        })
        .collect()
}

/// Sample-budget ablation: safety per `N` and the score-error rate.
pub fn run_experiment_3(cfg: &ExperimentConfig) -> ExperimentResult {
    let mut jobs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        for &n in &cfg.sample_budgets {
            let planner = PlannerConfig { samples_per_step: n, ..cfg.planner.clone() };
            let kind = ControllerKind::Ppc;
            jobs.push(Job {
                key: key(3, kind, "n", n.to_string(), seed),
                spec: plain_spec(cfg, seed, env_for(cfg, i)),
                kind,
                planner,
            });
        }
    }
    let episodes = run_jobs(cfg, jobs);
    let errors: Vec<(u64, Vec<(usize, f64)>)> = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| (seed, score_errors_at(cfg, seed, &env_for(cfg, i))))
        .collect();
    let mut rows = summarize(cfg, &episodes);
    for row in &mut rows {
        let n: usize = row.key.value.parse().expect("budget value");
        row.score_error = errors
            .iter()
            .find(|(s, _)| *s == row.key.seed)
            .and_then(|(_, v)| v.iter().find(|(m, _)| *m == n))
            .map_or(f64::NAN, |(_, e)| *e);
    }
    let series: Vec<(f64, f64)> = cfg
        .sample_budgets
        .iter()
        .map(|&n| {
            let e = nan_mean(rows.iter().filter(|r| r.key.value == n.to_string()).map(|r| r.score_error));
            (n as f64, e)
        })
        .filter(|(_, e)| e.is_finite() && *e > 0.0)
        .collect();
    let rate_fit = fit_rate_exponent(&series).ok().map(|(exponent, intercept)| RateFit { exponent, intercept });
    ExperimentResult { rate_fit, ..result(3, episodes, rows) }
}

/// Obstacle-count sweep for PPC, CBF-QP and CEM.
pub fn run_experiment_4(cfg: &ExperimentConfig) -> ExperimentResult {
    let kinds = [ControllerKind::Ppc, ControllerKind::CbfQp, ControllerKind::Cem, ControllerKind::Oracle];
    let mut jobs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        for &k in &cfg.obstacle_counts {
            let env = EnvConfig { n_obstacles: k, ..env_for(cfg, i) };
            for kind in kinds {
                jobs.push(Job {
                    key: key(4, kind, "n_obstacles", k.to_string(), seed),
                    spec: plain_spec(cfg, seed, env.clone()),
                    kind,
                    planner: cfg.planner.clone(),
                });
            }
        }
    }
    let episodes = run_jobs(cfg, jobs);
    let rows = summarize(cfg, &episodes);
    result(4, episodes, rows)
}

/// `P_T = Σ_t Σ_k ‖o_k(t+1) - o_k(t)‖` of the episode's initial obstacles.
pub fn path_length(state: &EnvState, horizon: u64) -> f64 {
    (0..horizon)
        .map(|t| {
            let a = state.obstacle_positions(t);
            let b = state.obstacle_positions(t + 1);
            a.iter().zip(&b).map(|(x, y)| (y - x).norm()).sum::<f64>()
        })
        .sum()
}

/// Obstacle-speed sweep: cost, safety and path length per multiplier.
pub fn run_experiment_5(cfg: &ExperimentConfig) -> ExperimentResult {
    let mut jobs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        for &w in &cfg.speed_multipliers {
            let mut env = env_for(cfg, i);
            env.obstacles.speed_multiplier = w;
            for kind in [ControllerKind::Ppc, ControllerKind::Oracle] {
                jobs.push(Job {
                    key: key(5, kind, "speed_multiplier", w.to_string(), seed),
                    spec: plain_spec(cfg, seed, env.clone()),
                    kind,
                    planner: cfg.planner.clone(),
                });
            }
        }
    }
    let episodes = run_jobs(cfg, jobs);
    let mut rows = summarize(cfg, &episodes);
    for row in &mut rows {
        let i = cfg.seeds.iter().position(|s| *s == row.key.seed).expect("known seed");
        let mut env = env_for(cfg, i);
        env.obstacles.speed_multiplier = row.key.value.parse().expect("speed value");
        row.path_length = path_length(&EnvState::new(&env, row.key.seed), cfg.horizon);
    }
    let mut out = result(5, episodes, rows);
    let points: Vec<(f64, f64)> = cfg
        .speed_multipliers
        .iter()
        .filter_map(|w| out.find("ppc", &w.to_string()))
        .map(|a| (a.cost_mean, a.path_length_mean))
        .collect();
    let (costs, paths): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    out.drift_correlation = (costs.len() >= 2).then(|| pearson(&costs, &paths));
    out
}

/// Recurring-mode ablation of conditional versus marginal density models.
pub fn run_experiment_6(cfg: &ExperimentConfig) -> ExperimentResult {
    let kinds = [
        ControllerKind::PpcContext,
        ControllerKind::PpcMarginal,
        ControllerKind::OfflineContextual,
        ControllerKind::Oracle,
    ];
    let planner = PlannerConfig { samples_per_step: cfg.context_samples_per_step, ..cfg.planner.clone() };
    let mut jobs = Vec::new();
    for (i, &seed) in cfg.seeds.iter().enumerate() {
        let env = env_for(cfg, i);
        let modes = ModeSchedule::generate(seed, cfg.horizon, cfg.switch_every, &env);
        let spec =
            EpisodeSpec { env, seed, horizon: cfg.horizon, reshuffle_at: None, modes: Some(modes), contextual: true };
        for kind in kinds {
            jobs.push(Job {
                key: key(6, kind, "", String::new(), seed),
                spec: spec.clone(),
                kind,
                planner: planner.clone(),
            });
        }
    }
    let episodes = run_jobs(cfg, jobs);
    let rows = summarize(cfg, &episodes);
    result(6, episodes, rows)
}

/// Dispatch on experiment id.
pub fn run_experiment(id: u8, cfg: &ExperimentConfig) -> Option<ExperimentResult> {
    Some(match id {
        1 => run_experiment_1(cfg),
        2 => run_experiment_2(cfg),
        3 => run_experiment_3(cfg),
        4 => run_experiment_4(cfg),
        5 => run_experiment_5(cfg),
        6 => run_experiment_6(cfg),
        _ => return None,
    })
}
