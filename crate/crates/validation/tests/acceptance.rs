//! Runs the analytic check suite and all six desk-scale experiments with the
//! default configuration and prints one PASS/FAIL line per criterion.
//! Exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use ppc_core::experiments::{run_experiment, ExperimentConfig, ExperimentResult};
use ppc_core::theory::run_all_checks;
use ppc_validation::*;

fn timed(id: u8, cfg: &ExperimentConfig) -> ExperimentResult {
    let start = Instant::now();
    let r = run_experiment(id, cfg).expect("known experiment");
    eprintln!("exp{id}: {:.1} s", start.elapsed().as_secs_f64());
    r
}

fn main() -> ExitCode {
    let mut criteria = Vec::new();

    let start = Instant::now();
    let entries = run_all_checks(0);
    eprintln!("analytic suite: {} entries in {:.1} s", entries.len(), start.elapsed().as_secs_f64());
    for e in entries.iter().filter(|e| !e.ok()) {
        eprintln!("  {}", e.to_record());
    }
    criteria.extend(analytic_criteria(&entries));

    let cfg = ExperimentConfig::default();
    let start = Instant::now();
    let r1 = timed(1, &cfg);
    criteria.push(exp1_ordering(&r1.aggregate()));
    criteria.push(displacement_bound(&r1.episodes));
    drop(r1);
    criteria.push(exp2_phase_transition(&timed(2, &cfg).aggregate()));
    let r3 = timed(3, &cfg);
    criteria.push(exp3_rate(&r3.aggregate(), &cfg.sample_budgets, r3.rate_fit));
    criteria.push(exp4_scalability(&timed(4, &cfg).aggregate()));
    let r5 = timed(5, &cfg);
    criteria.push(exp5_drift(&r5.aggregate(), &cfg.speed_multipliers, r5.drift_correlation));
    criteria.push(exp6_context(&timed(6, &cfg).aggregate()));
    criteria.push(runtime_budget(start.elapsed().as_secs_f64()));

    println!();
    for c in &criteria {
        println!("{}", c.line());
    }
    let failed = criteria.iter().filter(|c| !c.passed).count();
    println!("\nacceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
