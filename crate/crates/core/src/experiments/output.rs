//! On-disk layout of a run.
//!
//! ```text
//! <out>/manifest.txt                         key = value run description
//! <out>/exp<N>/summary.csv                   one row per episode
//! <out>/exp<N>/aggregate.csv                 seed means per (controller, param, value)
//! <out>/exp<N>/<controller>/<seed>.csv       step records (unswept experiments)
//! <out>/exp<N>/<controller>/<param>-<value>/<seed>.csv   step records (sweeps)
//! <out>/exp3/rate_fit.csv                    exponent, intercept
//! <out>/exp5/drift.csv                       correlation
//! ```
//!
//! CSV files have one header row, UTF-8, `.` decimals, `NaN` for missing
//! floats and an empty field for missing integers.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::MetricsSummary;
use super::protocols::{ExperimentResult, SummaryRow};
use super::record::{EpisodeKey, EpisodeLog, StepRecord};

/// Bumped whenever a column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Step CSV columns, in order.
pub const STEP_COLUMNS: [&str; 25] = [
    "t",
    "q_x",
    "q_y",
    "goal_x",
    "goal_y",
    "action_x",
    "action_y",
    "feasible",
    "cost",
    "beta_t",
    "beta_star",
    "kappa",
    "r_alpha",
    "alpha",
    "g_c",
    "peak_x",
    "peak_y",
    "filter_active",
    "filter_iterations",
    "filter_failed",
    "blocked",
    "fallback",
    "kappa_floor",
    "context_mode",
    "wall_clock_ns",
];

/// Summary CSV columns, in order.
pub const SUMMARY_COLUMNS: [&str; 15] = [
    "experiment",
    "controller",
    "param",
    "value",
    "seed",
    "safety_rate",
    "normalized_cost",
    "adaptation_steps",
    "mean_step_ns",
    "violations_total",
    "post_switch_safety",
    "steady_safety",
    "safe_step_cost_ratio",
    "score_error",
    "path_length",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryCsv {
    experiment: u8,
    controller: String,
    param: String,
    value: String,
    seed: u64,
    safety_rate: f64,
    normalized_cost: f64,
    adaptation_steps: Option<u64>,
    mean_step_ns: f64,
    violations_total: u64,
    post_switch_safety: f64,
    steady_safety: f64,
    safe_step_cost_ratio: f64,
    score_error: f64,
    path_length: f64,
}

impl From<&SummaryRow> for SummaryCsv {
    fn from(r: &SummaryRow) -> Self {
        let m = &r.metrics;
        Self {
            experiment: r.key.experiment,
            controller: r.key.controller.clone(),
            param: r.key.param.clone(),
            value: r.key.value.clone(),
            seed: r.key.seed,
            safety_rate: m.safety_rate,
            normalized_cost: m.normalized_cost,
            adaptation_steps: m.adaptation_steps,
            mean_step_ns: m.mean_step_ns,
            violations_total: m.violations_total,
            post_switch_safety: m.post_switch_safety,
            steady_safety: m.steady_safety,
            safe_step_cost_ratio: m.safe_step_cost_ratio,
            score_error: r.score_error,
            path_length: r.path_length,
        }
    }
}

impl From<SummaryCsv> for SummaryRow {
    fn from(c: SummaryCsv) -> Self {
        SummaryRow {
            key: EpisodeKey {
                experiment: c.experiment,
                controller: c.controller,
                param: c.param,
                value: c.value,
                seed: c.seed,
            },
            metrics: MetricsSummary {
                safety_rate: c.safety_rate,
                normalized_cost: c.normalized_cost,
                adaptation_steps: c.adaptation_steps,
                mean_step_ns: c.mean_step_ns,
                violations_total: c.violations_total,
                post_switch_safety: c.post_switch_safety,
                steady_safety: c.steady_safety,
                safe_step_cost_ratio: c.safe_step_cost_ratio,
            },
            score_error: c.score_error,
            path_length: c.path_length,
        }
    }
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Relative path of an episode's step CSV below the run directory.
pub fn episode_path(key: &EpisodeKey) -> PathBuf {
    let mut p = PathBuf::from(format!("exp{}", key.experiment)).join(&key.controller);
    if !key.param.is_empty() {
        p = p.join(format!("{}-{}", key.param, key.value));
    }
    p.join(format!("{}.csv", key.seed))
}

pub fn write_steps(path: &Path, steps: &[StepRecord]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if steps.is_empty() {
        w.write_record(STEP_COLUMNS).map_err(csv_error)?;
    }
    for s in steps {
        w.serialize(s).map_err(csv_error)?;
    }
    w.flush()
}

pub fn read_steps(path: &Path) -> io::Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_error)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if rows.is_empty() {
        w.write_record(SUMMARY_COLUMNS).map_err(csv_error)?;
    }
    for r in rows {
        w.serialize(SummaryCsv::from(r)).map_err(csv_error)?;
    }
    w.flush()
}

pub fn read_summary(path: &Path) -> io::Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize::<SummaryCsv>().map(|row| row.map(SummaryRow::from)).collect::<Result<_, _>>().map_err(csv_error)
}

fn write_aggregate(path: &Path, result: &ExperimentResult) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record([
        "experiment",
        "controller",
        "param",
        "value",
        "seeds",
        "safety_mean",
        "safety_std",
        "cost_mean",
        "cost_std",
        "post_switch_mean",
        "steady_mean",
        "safe_cost_ratio_mean",
        "score_error_mean",
        "path_length_mean",
        "step_ns_mean",
    ])
    .map_err(csv_error)?;
    for a in result.aggregate() {
        w.write_record([
            a.experiment.to_string(),
            a.controller,
            a.param,
            a.value,
            a.seeds.to_string(),
            a.safety_mean.to_string(),
            a.safety_std.to_string(),
            a.cost_mean.to_string(),
            a.cost_std.to_string(),
            a.post_switch_mean.to_string(),
            a.steady_mean.to_string(),
            a.safe_cost_ratio_mean.to_string(),
            a.score_error_mean.to_string(),
            a.path_length_mean.to_string(),
            a.step_ns_mean.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

/// Run description written before any episode and rewritten on completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub status: String,
    pub experiments: Vec<u8>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let ids: Vec<String> = self.experiments.iter().map(|e| format!("exp{e}")).collect();
        let mut out = format!(
            "schema_version = {SCHEMA_VERSION}\nversion = {}\nstatus = {}\nexperiments = {}\nconfig_hash = {}\nrolling_window = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.status,
            ids.join(","),
            self.config.hash(),
            self.config.metrics.adaptation_window,
        );
        out.push_str(&self.config.to_text());
        out
    }

    pub fn write(&self, out_dir: &Path) -> io::Result<PathBuf> {
        fs::create_dir_all(out_dir)?;
        let path = out_dir.join("manifest.txt");
        fs::write(&path, self.to_text())?;
        Ok(path)
    }
}

/// Write every CSV of `result` below `out_dir`.
pub fn write_experiment(result: &ExperimentResult, out_dir: &Path) -> io::Result<()> {
    let dir = out_dir.join(format!("exp{}", result.id));
    fs::create_dir_all(&dir)?;
    for log in &result.episodes {
        write_episode(out_dir, log)?;
    }
    write_summary(&dir.join("summary.csv"), &result.rows)?;
    write_aggregate(&dir.join("aggregate.csv"), result)?;
    if let Some(fit) = result.rate_fit {
        fs::write(dir.join("rate_fit.csv"), format!("exponent,intercept\n{},{}\n", fit.exponent, fit.intercept))?;
    }
    if let Some(r) = result.drift_correlation {
        fs::write(dir.join("drift.csv"), format!("correlation\n{r}\n"))?;
    }
    Ok(())
}

pub fn write_episode(out_dir: &Path, log: &EpisodeLog) -> io::Result<()> {
    write_steps(&out_dir.join(episode_path(&log.key)), &log.steps)
}

/// Write all results and a completed manifest.
pub fn write_results(results: &[ExperimentResult], config: &ExperimentConfig, out_dir: &Path) -> io::Result<Manifest> {
    for r in results {
        write_experiment(r, out_dir)?;
    }
    let manifest = Manifest {
        status: "complete".into(),
        experiments: results.iter().map(|r| r.id).collect(),
        config: config.clone(),
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}
