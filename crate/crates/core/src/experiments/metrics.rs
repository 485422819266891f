use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{EpisodeLog, MarkerKind, StepRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("episode has no steps")]
    EmptyEpisode,
    #[error("episodes differ: {0}")]
    MismatchedEpisodes(String),
}

/// Fraction of steps whose action was in the feasibility manifold.
pub fn safety_rate(steps: &[StepRecord]) -> f64 {
    if steps.is_empty() {
        return f64::NAN;
    }
    steps.iter().filter(|s| s.feasible).count() as f64 / steps.len() as f64
}

/// `Σ cost(controller) / Σ cost(oracle)` over matched episodes.
pub fn normalized_cost(log: &EpisodeLog, oracle: &EpisodeLog) -> Result<f64, MetricsError> {
    if log.is_empty() || oracle.is_empty() {
        return Err(MetricsError::EmptyEpisode);
    }
    if log.key.seed != oracle.key.seed {
        return Err(MetricsError::MismatchedEpisodes(format!("seed {} vs {}", log.key.seed, oracle.key.seed)));
    }
    if log.len() != oracle.len() {
        return Err(MetricsError::MismatchedEpisodes(format!("length {} vs {}", log.len(), oracle.len())));
    }
    let total = |l: &EpisodeLog| l.steps.iter().map(|s| s.cost).sum::<f64>();
    Ok(total(log) / total(oracle))
}

/// Steps after `change_step` until the safety rate over the last `window`
/// steps, all taken at or after the change, first reaches `threshold`.
/// `None` when the horizon ends first.
pub fn adaptation_steps(steps: &[StepRecord], change_step: u64, threshold: f64, window: usize) -> Option<u64> {
    assert!(window >= 1);
    let start = steps.iter().position(|s| s.t >= change_step)?;
    let after = &steps[start..];
    let mut safe = 0usize;
    for (i, s) in after.iter().enumerate() {
        safe += s.feasible as usize;
        if i >= window {
            safe -= after[i - window].feasible as usize;
        }
        if i + 1 >= window && safe as f64 >= threshold * window as f64 {
            return Some((i + 1) as u64);
        }
    }
    None
}

/// Trailing safety rate over `window` steps (shorter at the start).
pub fn rolling_safety(steps: &[StepRecord], window: usize) -> Vec<f64> {
    assert!(window >= 1);
    let mut out = Vec::with_capacity(steps.len());
    let mut safe = 0usize;
    for (i, s) in steps.iter().enumerate() {
        safe += s.feasible as usize;
        if i >= window {
            safe -= steps[i - window].feasible as usize;
        }
        out.push(safe as f64 / (i + 1).min(window) as f64);
    }
    out
}

/// Split steps into those within `post_steps` of a mode switch and the rest.
pub fn split_post_switch(log: &EpisodeLog, post_steps: u64) -> (Vec<&StepRecord>, Vec<&StepRecord>) {
    let switches = log.marker_steps(MarkerKind::ModeSwitch);
    log.steps.iter().partition(|s| switches.iter().any(|&m| s.t >= m && s.t < m + post_steps))
}

fn rate(steps: &[&StepRecord]) -> f64 {
    if steps.is_empty() {
        return f64::NAN;
    }
    steps.iter().filter(|s| s.feasible).count() as f64 / steps.len() as f64
}

fn mean_safe_cost(steps: &[StepRecord]) -> f64 {
    let safe: Vec<f64> = steps.iter().filter(|s| s.feasible).map(|s| s.cost).collect();
    if safe.is_empty() {
        f64::NAN
    } else {
        safe.iter().sum::<f64>() / safe.len() as f64
    }
}

/// Metric settings that are not properties of a single log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub adaptation_threshold: f64,
    pub adaptation_window: usize,
    pub post_switch_steps: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { adaptation_threshold: 0.95, adaptation_window: 50, post_switch_steps: 10 }
    }
}

/// Per-episode metrics. Inapplicable entries are `NaN` (or `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub safety_rate: f64,
    pub normalized_cost: f64,
    /// Steps to recover after the first reshuffle; `None` if it never does
    /// or there is no reshuffle.
    pub adaptation_steps: Option<u64>,
    pub mean_step_ns: f64,
    pub violations_total: u64,
    pub post_switch_safety: f64,
    pub steady_safety: f64,
    /// Mean cost over this episode's safe steps divided by the same
    /// quantity for the matched oracle episode.
    pub safe_step_cost_ratio: f64,
}

impl MetricsSummary {
    pub fn compute(log: &EpisodeLog, oracle: Option<&EpisodeLog>, cfg: &MetricsConfig) -> Self {
        let normalized = oracle.and_then(|o| normalized_cost(log, o).ok()).unwrap_or(f64::NAN);
        let adaptation = log
            .marker_steps(MarkerKind::Reshuffle)
            .first()
            .and_then(|&c| adaptation_steps(&log.steps, c, cfg.adaptation_threshold, cfg.adaptation_window));
        let (post, steady) = if log.marker_steps(MarkerKind::ModeSwitch).is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let (p, s) = split_post_switch(log, cfg.post_switch_steps);
            (rate(&p), rate(&s))
        };
        let ratio = oracle.map(|o| mean_safe_cost(&log.steps) / mean_safe_cost(&o.steps)).unwrap_or(f64::NAN);
        let n = log.steps.len().max(1) as f64;
        Self {
            safety_rate: safety_rate(&log.steps),
            normalized_cost: normalized,
            adaptation_steps: adaptation,
            mean_step_ns: log.steps.iter().map(|s| s.wall_clock_ns as f64).sum::<f64>() / n,
            violations_total: log.steps.iter().filter(|s| !s.feasible).count() as u64,
            post_switch_safety: post,
            steady_safety: steady,
            safe_step_cost_ratio: ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::record::{EpisodeKey, Marker};

    pub(crate) fn step(t: u64, feasible: bool, cost: f64) -> StepRecord {
        StepRecord {
            t,
            q_x: 0.0,
            q_y: 0.0,
            goal_x: 0.0,
            goal_y: 0.0,
            action_x: 0.0,
            action_y: 0.0,
            feasible,
            cost,
            beta_t: f64::NAN,
            beta_star: f64::NAN,
            kappa: f64::NAN,
            r_alpha: f64::NAN,
            alpha: f64::NAN,
            g_c: f64::NAN,
            peak_x: f64::NAN,
            peak_y: f64::NAN,
            filter_active: false,
            filter_iterations: 0,
            filter_failed: false,
            blocked: false,
            fallback: false,
            kappa_floor: false,
            context_mode: None,
            wall_clock_ns: 10,
        }
    }

    fn log(flags: &[bool], markers: Vec<Marker>) -> EpisodeLog {
        EpisodeLog {
            key: EpisodeKey {
                experiment: 1,
                controller: "x".into(),
                param: String::new(),
                value: String::new(),
                seed: 0,
            },
            config: String::new(),
            steps: flags.iter().enumerate().map(|(t, &f)| step(t as u64, f, 1.0 + t as f64)).collect(),
            markers,
        }
    }

    #[test]
    fn safety_of_all_and_alternating() {
        assert_eq!(safety_rate(&log(&[true; 10], vec![]).steps), 1.0);
        let alt: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        assert_eq!(safety_rate(&log(&alt, vec![]).steps), 0.5);
    }

    #[test]
    fn normalized_cost_of_self_is_one() {
        let l = log(&[true; 5], vec![]);
        assert_eq!(normalized_cost(&l, &l), Ok(1.0));
        let empty = log(&[], vec![]);
        assert_eq!(normalized_cost(&empty, &empty), Err(MetricsError::EmptyEpisode));
        let short = log(&[true; 4], vec![]);
        assert!(matches!(normalized_cost(&l, &short), Err(MetricsError::MismatchedEpisodes(_))));
    }

    #[test]
    fn adaptation_bounds() {
        let all = log(&[true; 200], vec![]);
        assert_eq!(adaptation_steps(&all.steps, 100, 0.95, 50), Some(50));
        let none = log(&[false; 200], vec![]);
        assert_eq!(adaptation_steps(&none.steps, 100, 0.95, 50), None);
        let mut flags = vec![false; 120];
        flags.extend([true; 80]);
        let late = log(&flags, vec![]);
        // Window of 50 needs at most 2 failures: earliest end is t = 167.
        assert_eq!(adaptation_steps(&late.steps, 100, 0.95, 50), Some(68));
    }

    #[test]
    fn post_switch_split() {
        let markers = vec![Marker { kind: MarkerKind::ModeSwitch, step: 40 }];
        let mut flags = vec![true; 80];
        flags[41] = false;
        let l = log(&flags, markers);
        let s = MetricsSummary::compute(&l, None, &MetricsConfig::default());
        assert_eq!(s.post_switch_safety, 0.9);
        assert_eq!(s.steady_safety, 1.0);
        assert_eq!(s.violations_total, 1);
        assert!(s.normalized_cost.is_nan());
    }

    #[test]
    fn rolling_window() {
        let l = log(&[true, false, true, true], vec![]);
        assert_eq!(rolling_safety(&l.steps, 2), vec![1.0, 0.5, 0.5, 1.0]);
    }
}
