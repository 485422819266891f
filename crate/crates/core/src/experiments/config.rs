use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::metrics::MetricsConfig;
use crate::baselines::{CemConfig, CBF_GAMMA, OFFLINE_SAMPLES};
use crate::controller::PlannerConfig;
use crate::density::CurvatureRule;
use crate::env::EnvConfig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
}

/// Every tunable of an experiment run. Defaults are the desk-scale values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub env: EnvConfig,
    pub planner: PlannerConfig,
    pub cem: CemConfig,
    pub cbf_gamma: f64,
    pub gp_refit_period: u64,
    pub gp_max_points: usize,
    pub gp_noise_variance: f64,
    pub offline_samples: usize,
    pub metrics: MetricsConfig,
    pub beta_multiples: Vec<f64>,
    pub sample_budgets: Vec<usize>,
    pub reference_samples: usize,
    pub eval_points: usize,
    pub obstacle_counts: Vec<usize>,
    pub speed_multipliers: Vec<f64>,
    pub context_samples_per_step: usize,
    pub switch_every: u64,
    pub samples_per_mode: usize,
    /// Controller labels to run; empty runs all. The oracle always runs
    /// because every cost is normalized by it.
    pub controllers: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            horizon: 300,
            seeds: vec![0, 1, 2],
            env: EnvConfig::default(),
            planner: PlannerConfig::default(),
            cem: CemConfig::default(),
            cbf_gamma: CBF_GAMMA,
            gp_refit_period: 50,
            gp_max_points: 500,
            gp_noise_variance: 1e-4,
            offline_samples: OFFLINE_SAMPLES,
            metrics: MetricsConfig::default(),
            beta_multiples: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            sample_budgets: vec![10, 50, 100, 500, 1000],
            reference_samples: 10_000,
            eval_points: 500,
            obstacle_counts: vec![3, 5, 10, 15, 20],
            speed_multipliers: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            context_samples_per_step: 25,
            switch_every: 40,
            samples_per_mode: 200,
            controllers: Vec::new(),
        }
    }
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> =
        value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(invalid(key, value, "empty list"));
    }
    Ok(items)
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn rule_name(rule: CurvatureRule) -> &'static str {
    match rule {
        CurvatureRule::FisherMin => "fisher_min",
        CurvatureRule::BoundaryNormal => "boundary_normal",
    }
}

/// Every label a `controllers` entry may name.
pub const CONTROLLER_LABELS: [&str; 10] = [
    "ppc",
    "ppc_context",
    "ppc_marginal",
    "offline_drgd",
    "offline_contextual",
    "cbf_qp",
    "gp_cbf",
    "cem",
    "static_conservative",
    "oracle",
];

impl ExperimentConfig {
    /// The reference protocol: `T = 1000` and five seeds.
    pub fn paper_scale() -> Self {
        Self { horizon: 1000, seeds: (0..5).collect(), ..Self::default() }
    }

    /// Whether episodes of controller `label` should run.
    pub fn runs(&self, label: &str) -> bool {
        label == "oracle" || self.controllers.is_empty() || self.controllers.iter().any(|c| c == label)
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.planner;
        let o = &self.env.obstacles;
        vec![
            ("horizon", self.horizon.to_string()),
            ("seeds", list(&self.seeds)),
            ("samples_per_step", p.samples_per_step.to_string()),
            ("env.n_obstacles", self.env.n_obstacles.to_string()),
            ("env.u_max", self.env.u_max.to_string()),
            ("env.d_safe", self.env.d_safe.to_string()),
            ("env.goal_radius", self.env.goal_radius.to_string()),
            ("env.radius_min", o.radius.0.to_string()),
            ("env.radius_max", o.radius.1.to_string()),
            ("env.amplitude_min", o.amplitude.0.to_string()),
            ("env.amplitude_max", o.amplitude.1.to_string()),
            ("env.frequency_min", o.frequency.0.to_string()),
            ("env.frequency_max", o.frequency.1.to_string()),
            ("env.speed_multiplier", o.speed_multiplier.to_string()),
            ("planner.eta0", p.eta0.to_string()),
            ("planner.inner_steps", p.inner_steps_k.to_string()),
            ("planner.schedule_c", p.schedule_c.to_string()),
            ("planner.retraction_steps", p.retraction_steps_j.to_string()),
            ("planner.retraction_factor", p.retraction_factor.to_string()),
            ("planner.alpha_percentile", p.alpha_percentile.to_string()),
            ("planner.window_steps", p.window_steps.to_string()),
            ("planner.context_window_steps", p.context_window_steps.to_string()),
            ("planner.max_probes", p.max_probes.to_string()),
            ("planner.curvature_rule", rule_name(p.curvature_rule).to_string()),
            ("cem.n_candidates", self.cem.n_candidates.to_string()),
            ("cem.elite_fraction", self.cem.elite_fraction.to_string()),
            ("cem.iterations", self.cem.iterations.to_string()),
            ("cem.init_std", self.cem.init_std.to_string()),
            ("cbf.gamma", self.cbf_gamma.to_string()),
            ("gp.refit_period", self.gp_refit_period.to_string()),
            ("gp.max_points", self.gp_max_points.to_string()),
            ("gp.noise_variance", self.gp_noise_variance.to_string()),
            ("offline.samples", self.offline_samples.to_string()),
            ("metrics.adaptation_threshold", self.metrics.adaptation_threshold.to_string()),
            ("metrics.adaptation_window", self.metrics.adaptation_window.to_string()),
            ("metrics.post_switch_steps", self.metrics.post_switch_steps.to_string()),
            ("exp2.beta_multiples", list(&self.beta_multiples)),
            ("exp3.sample_budgets", list(&self.sample_budgets)),
            ("exp3.reference_samples", self.reference_samples.to_string()),
            ("exp3.eval_points", self.eval_points.to_string()),
            ("exp4.obstacle_counts", list(&self.obstacle_counts)),
            ("exp5.speed_multipliers", list(&self.speed_multipliers)),
            ("exp6.samples_per_step", self.context_samples_per_step.to_string()),
            ("exp6.switch_every", self.switch_every.to_string()),
            ("exp6.samples_per_mode", self.samples_per_mode.to_string()),
            ("controllers", self.controllers.join(",")),
        ]
    }

    /// Canonical `key = value` text, one entry per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        }
        out
    }

    /// Hex SHA-256 of [`Self::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "horizon" => self.horizon = parse(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "samples_per_step" => {
                let n: usize = parse(key, v)?;
                self.planner.samples_per_step = n;
                self.cem.samples_per_step = n;
            }
            "env.n_obstacles" => self.env.n_obstacles = parse(key, v)?,
            "env.u_max" => self.env.u_max = parse(key, v)?,
            "env.d_safe" => self.env.d_safe = parse(key, v)?,
            "env.goal_radius" => self.env.goal_radius = parse(key, v)?,
            "env.radius_min" => self.env.obstacles.radius.0 = parse(key, v)?,
            "env.radius_max" => self.env.obstacles.radius.1 = parse(key, v)?,
            "env.amplitude_min" => self.env.obstacles.amplitude.0 = parse(key, v)?,
            "env.amplitude_max" => self.env.obstacles.amplitude.1 = parse(key, v)?,
            "env.frequency_min" => self.env.obstacles.frequency.0 = parse(key, v)?,
            "env.frequency_max" => self.env.obstacles.frequency.1 = parse(key, v)?,
            "env.speed_multiplier" => self.env.obstacles.speed_multiplier = parse(key, v)?,
            "planner.eta0" => self.planner.eta0 = parse(key, v)?,
            "planner.inner_steps" => self.planner.inner_steps_k = parse(key, v)?,
            "planner.schedule_c" => self.planner.schedule_c = parse(key, v)?,
            "planner.retraction_steps" => self.planner.retraction_steps_j = parse(key, v)?,
            "planner.retraction_factor" => self.planner.retraction_factor = parse(key, v)?,
            "planner.alpha_percentile" => self.planner.alpha_percentile = parse(key, v)?,
            "planner.window_steps" => self.planner.window_steps = parse(key, v)?,
            "planner.context_window_steps" => self.planner.context_window_steps = parse(key, v)?,
            "planner.max_probes" => self.planner.max_probes = parse(key, v)?,
            "planner.curvature_rule" => {
                self.planner.curvature_rule = match v {
                    "fisher_min" => CurvatureRule::FisherMin,
                    "boundary_normal" => CurvatureRule::BoundaryNormal,
                    _ => return Err(invalid(key, v, "expected fisher_min or boundary_normal")),
                }
            }
            "cem.n_candidates" => self.cem.n_candidates = parse(key, v)?,
            "cem.elite_fraction" => self.cem.elite_fraction = parse(key, v)?,
            "cem.iterations" => self.cem.iterations = parse(key, v)?,
            "cem.init_std" => self.cem.init_std = parse(key, v)?,
            "cbf.gamma" => self.cbf_gamma = parse(key, v)?,
            "gp.refit_period" => self.gp_refit_period = parse(key, v)?,
            "gp.max_points" => self.gp_max_points = parse(key, v)?,
            "gp.noise_variance" => self.gp_noise_variance = parse(key, v)?,
            "offline.samples" => self.offline_samples = parse(key, v)?,
            "metrics.adaptation_threshold" => self.metrics.adaptation_threshold = parse(key, v)?,
            "metrics.adaptation_window" => self.metrics.adaptation_window = parse(key, v)?,
            "metrics.post_switch_steps" => self.metrics.post_switch_steps = parse(key, v)?,
            "exp2.beta_multiples" => self.beta_multiples = parse_list(key, v)?,
            "exp3.sample_budgets" => self.sample_budgets = parse_list(key, v)?,
            "exp3.reference_samples" => self.reference_samples = parse(key, v)?,
            "exp3.eval_points" => self.eval_points = parse(key, v)?,
            "exp4.obstacle_counts" => self.obstacle_counts = parse_list(key, v)?,
            "exp5.speed_multipliers" => self.speed_multipliers = parse_list(key, v)?,
            "exp6.samples_per_step" => self.context_samples_per_step = parse(key, v)?,
            "exp6.switch_every" => self.switch_every = parse(key, v)?,
            "exp6.samples_per_mode" => self.samples_per_mode = parse(key, v)?,
            "controllers" => {
                self.controllers = v.split(',').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect()
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Reject values the experiments cannot run with.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, value: String, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(invalid(key, &value, reason))
            }
        };
        check(self.horizon > 0, "horizon", self.horizon.to_string(), "must be positive")?;
        check(!self.seeds.is_empty(), "seeds", list(&self.seeds), "need at least one seed")?;
        check(self.planner.samples_per_step > 0, "samples_per_step", "0".into(), "must be positive")?;
        check(self.env.u_max > 0.0, "env.u_max", self.env.u_max.to_string(), "must be positive")?;
        check(self.env.d_safe >= 0.0, "env.d_safe", self.env.d_safe.to_string(), "must be non-negative")?;
        let o = &self.env.obstacles;
        check(
            o.radius.0 <= o.radius.1 && o.radius.0 > 0.0,
            "env.radius_min",
            o.radius.0.to_string(),
            "need 0 < min ≤ max",
        )?;
        check(o.amplitude.0 <= o.amplitude.1, "env.amplitude_min", o.amplitude.0.to_string(), "need min ≤ max")?;
        check(o.frequency.0 <= o.frequency.1, "env.frequency_min", o.frequency.0.to_string(), "need min ≤ max")?;
        check(self.planner.eta0 > 0.0, "planner.eta0", self.planner.eta0.to_string(), "must be positive")?;
        check(
            (0.0..=100.0).contains(&self.planner.alpha_percentile),
            "planner.alpha_percentile",
            self.planner.alpha_percentile.to_string(),
            "must lie in [0, 100]",
        )?;
        check(self.planner.window_steps >= 1, "planner.window_steps", "0".into(), "must be at least 1")?;
        check(
            self.planner.context_window_steps >= 1,
            "planner.context_window_steps",
            "0".into(),
            "must be at least 1",
        )?;
        check(self.cem.n_candidates > 0, "cem.n_candidates", "0".into(), "must be positive")?;
        check(
            self.cem.elite_fraction > 0.0 && self.cem.elite_fraction <= 1.0,
            "cem.elite_fraction",
            self.cem.elite_fraction.to_string(),
            "must lie in (0, 1]",
        )?;
        check(self.cem.init_std > 0.0, "cem.init_std", self.cem.init_std.to_string(), "must be positive")?;
        check(
            self.cbf_gamma > 0.0 && self.cbf_gamma <= 1.0,
            "cbf.gamma",
            self.cbf_gamma.to_string(),
            "must lie in (0, 1]",
        )?;
        check(self.gp_refit_period > 0, "gp.refit_period", "0".into(), "must be positive")?;
        check(self.gp_max_points > 0, "gp.max_points", "0".into(), "must be positive")?;
        check(
            self.gp_noise_variance > 0.0,
            "gp.noise_variance",
            self.gp_noise_variance.to_string(),
            "must be positive",
        )?;
        check(self.offline_samples > 0, "offline.samples", "0".into(), "must be positive")?;
        check(self.metrics.adaptation_window > 0, "metrics.adaptation_window", "0".into(), "must be positive")?;
        check(
            self.beta_multiples.iter().all(|m| *m > 0.0),
            "exp2.beta_multiples",
            list(&self.beta_multiples),
            "must be positive",
        )?;
        check(
            self.sample_budgets.iter().all(|n| *n > 0),
            "exp3.sample_budgets",
            list(&self.sample_budgets),
            "must be positive",
        )?;
        check(self.reference_samples > 0, "exp3.reference_samples", "0".into(), "must be positive")?;
        check(self.eval_points > 0, "exp3.eval_points", "0".into(), "must be positive")?;
        check(
            self.speed_multipliers.iter().all(|m| *m >= 0.0),
            "exp5.speed_multipliers",
            list(&self.speed_multipliers),
            "must be non-negative",
        )?;
        check(self.context_samples_per_step > 0, "exp6.samples_per_step", "0".into(), "must be positive")?;
        check(self.switch_every > 0, "exp6.switch_every", "0".into(), "must be positive")?;
        check(self.samples_per_mode > 0, "exp6.samples_per_mode", "0".into(), "must be positive")?;
        if let Some(c) = self.controllers.iter().find(|c| !CONTROLLER_LABELS.contains(&c.as_str())) {
            return Err(invalid("controllers", c, "unknown controller"));
        }
        Ok(())
    }

    /// Parse `key = value` lines onto `self`. Blank lines and `#` comments
    /// are skipped. Errors name the offending line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), (usize, ConfigError)> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err((i + 1, invalid(line, "", "expected `key = value`")));
            };
            self.set(k.trim(), v).map_err(|e| (i + 1, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::default();
        c.set("planner.eta0", "0.013").unwrap();
        c.set("seeds", "4,5").unwrap();
        c.set("planner.curvature_rule", "fisher_min").unwrap();
        let mut back = ExperimentConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hash_tracks_changes() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set("horizon", "301").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_key_and_bad_values() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.set("nope", "1"), Err(ConfigError::UnknownKey("nope".into())));
        assert!(matches!(c.set("horizon", "abc"), Err(ConfigError::InvalidValue { .. })));
        c.set("horizon", "0").unwrap();
        assert!(c.validate().is_err());
        let err = ExperimentConfig::default().apply_text("horizon = 10\n\nbogus = 3\n").unwrap_err();
        assert_eq!(err.0, 3);
    }

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::paper_scale().validate().unwrap();
    }

    #[test]
    fn controller_subset() {
        let mut c = ExperimentConfig::default();
        assert!(c.runs("cem"));
        c.set("controllers", "ppc, cem").unwrap();
        assert!(c.runs("cem") && c.runs("oracle") && !c.runs("cbf_qp"));
        let mut back = ExperimentConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        c.set("controllers", "ppc,mpc").unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::InvalidValue { value, .. }) if value == "mpc"));
    }
}
