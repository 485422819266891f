use std::fs;

use ppc_core::env::{EnvConfig, EnvState};
use ppc_core::experiments::*;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        horizon: 30,
        seeds: vec![4],
        reference_samples: 2000,
        eval_points: 100,
        ..ExperimentConfig::default()
    }
}

/// Zero every timing field so two runs can be compared exactly.
fn untimed(mut r: ExperimentResult) -> String {
    for e in &mut r.episodes {
        for s in &mut e.steps {
            s.wall_clock_ns = 0;
        }
    }
    for row in &mut r.rows {
        row.metrics.mean_step_ns = 0.0;
    }
    // NaN fields make `==` useless; the Debug rendering is exact.
    format!("{:?}", (r.episodes, r.rows, r.rate_fit, r.drift_correlation))
}

#[test]
fn exp1_fields_every_controller_on_matched_seeds() {
    let cfg = small();
    let r = run_experiment_1(&cfg);
    let labels = ["ppc", "offline_drgd", "cbf_qp", "gp_cbf", "cem", "static_conservative", "oracle"];
    assert_eq!(r.episodes.len(), labels.len());
    for label in labels {
        let e = r.episodes.iter().find(|e| e.key.controller == label).expect(label);
        assert_eq!(e.len(), 30);
        assert!(e.markers.iter().all(|m| m.step < 30));
        assert_eq!(e.marker_steps(MarkerKind::Reshuffle), vec![15]);
    }
    for row in &r.rows {
        assert!((0.0..=1.0).contains(&row.metrics.safety_rate));
    }
    let oracle = r.rows.iter().find(|r| r.key.controller == "oracle").unwrap();
    assert_eq!(oracle.metrics.normalized_cost, 1.0);
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let cfg = small();
    assert_eq!(untimed(run_experiment_6(&cfg)), untimed(run_experiment_6(&cfg)));
    assert_eq!(untimed(run_experiment_3(&cfg)), untimed(run_experiment_3(&cfg)));
}

#[test]
fn stiffness_sweep_has_one_row_per_multiple() {
    let mut cfg = small();
    cfg.horizon = 10;
    let r = run_experiment_2(&cfg);
    let ppc: Vec<_> = r.rows.iter().filter(|r| r.key.controller == "ppc").collect();
    assert_eq!(ppc.len(), 7);
    for (row, m) in ppc.iter().zip(&cfg.beta_multiples) {
        assert_eq!(row.key.value, m.to_string());
        assert!(row.metrics.normalized_cost.is_finite());
    }
}

#[test]
fn controller_subset_keeps_the_oracle() {
    let mut cfg = small();
    cfg.set("controllers", "cem").unwrap();
    let r = run_experiment_4(&cfg);
    assert!(r.episodes.iter().all(|e| e.key.controller == "cem" || e.key.controller == "oracle"));
    assert!(r.rows.iter().filter(|r| r.key.controller == "cem").all(|r| r.metrics.normalized_cost.is_finite()));
}

#[test]
fn csv_round_trip_and_column_order() {
    let cfg = small();
    let r = run_experiment_1(&cfg);
    let dir = tempfile::tempdir().unwrap();
    write_experiment(&r, dir.path()).unwrap();

    let summary_path = dir.path().join("exp1/summary.csv");
    let header = fs::read_to_string(&summary_path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, SUMMARY_COLUMNS.join(","));
    let back = read_summary(&summary_path).unwrap();
    assert_eq!(format!("{back:?}"), format!("{:?}", r.rows));

    for e in &r.episodes {
        let path = dir.path().join(episode_path(&e.key));
        let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
        assert_eq!(header, STEP_COLUMNS.join(","));
        assert_eq!(format!("{:?}", read_steps(&path).unwrap()), format!("{:?}", e.steps));
    }

    // Aggregates are recomputable from the step files alone.
    let ppc = r.episodes.iter().find(|e| e.key.controller == "ppc").unwrap();
    let steps = read_steps(&dir.path().join(episode_path(&ppc.key))).unwrap();
    let row = back.iter().find(|r| r.key.controller == "ppc").unwrap();
    assert_eq!(safety_rate(&steps), row.metrics.safety_rate);
}

#[test]
fn manifest_hash_tracks_config() {
    let a = ExperimentConfig::default();
    let mut b = a.clone();
    let text = |c: &ExperimentConfig| {
        Manifest { status: "complete".into(), experiments: vec![1], config: c.clone() }.to_text()
    };
    assert_eq!(text(&a), text(&b));
    b.set("cem.iterations", "6").unwrap();
    assert_ne!(a.hash(), b.hash());
    assert!(text(&b).contains(&format!("config_hash = {}", b.hash())));
    b.set("cem.iterations", "5").unwrap();
    assert_eq!(a.hash(), b.hash());
}

#[test]
fn path_length_is_linear_at_low_speed() {
    let mut env = EnvConfig::default();
    let p = |w: f64, env: &mut EnvConfig| {
        env.obstacles.speed_multiplier = w;
        path_length(&EnvState::new(env, 3), 300)
    };
    let (a, b) = (p(0.125, &mut env), p(0.25, &mut env));
    let ratio = b / a;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
    assert_eq!(p(0.0, &mut env), 0.0);
}

#[test]
fn score_error_falls_with_budget() {
    let cfg = small();
    let errors = score_errors_at(&cfg, 4, &cfg.env);
    assert_eq!(errors.len(), cfg.sample_budgets.len());
    assert!(errors.last().unwrap().1 < errors[0].1);
}
