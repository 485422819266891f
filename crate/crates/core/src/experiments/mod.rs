//! Metrics, the six experiment protocols and result persistence.

mod config;
mod episode;
mod metrics;
mod output;
mod protocols;
mod record;

pub use config::{ConfigError, ExperimentConfig, CONTROLLER_LABELS};
pub use episode::{run_episode, ControllerKind, EpisodeSpec, ModeSchedule};
pub use metrics::{
    adaptation_steps, normalized_cost, rolling_safety, safety_rate, split_post_switch, MetricsConfig, MetricsError,
    MetricsSummary,
};
pub use output::{
    episode_path, read_steps, read_summary, write_episode, write_experiment, write_results, write_steps, write_summary,
    Manifest, SCHEMA_VERSION, STEP_COLUMNS, SUMMARY_COLUMNS,
};
pub use protocols::{
    path_length, run_experiment, run_experiment_1, run_experiment_2, run_experiment_3, run_experiment_4,
    run_experiment_5, run_experiment_6, score_errors_at, AggregateRow, ExperimentResult, RateFit, SummaryRow,
    EXPERIMENTS,
};
pub use record::{EpisodeKey, EpisodeLog, Marker, MarkerKind, StepRecord};
