use approx::assert_abs_diff_eq;
use ppc_core::density::KdeModel;
use ppc_core::rng;
use ppc_core::theory::*;
use ppc_core::{Mat2, Vec2};

const H: f64 = 0.3;

fn single(goal: Vec2, beta: f64) -> SyntheticScene {
    let c = Vec2::new(0.3, -0.2);
    let m = KdeModel::new(vec![c], H).unwrap();
    let alpha = 0.2 * m.density(&c);
    SyntheticScene::new(m, Vec2::zeros(), goal, beta, alpha, 121)
}

fn cluster(beta: f64) -> SyntheticScene {
    let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(0.12, 0.05), Vec2::new(-0.05, 0.1), Vec2::new(0.04, -0.08)];
    let m = KdeModel::new(pts, H).unwrap();
    let alpha = 0.3 * m.density(&Vec2::new(0.03, 0.02));
    SyntheticScene::new(m, Vec2::zeros(), Vec2::new(1.0, 0.4), beta, alpha, 121)
}

fn pair(separation: f64, alpha_over_saddle: f64) -> SyntheticScene {
    let (a, b) = (Vec2::new(-separation / 2.0, 0.0), Vec2::new(separation / 2.0, 0.0));
    let m = KdeModel::new(vec![a, b], H).unwrap();
    let alpha = alpha_over_saddle * m.density(&Vec2::zeros());
    SyntheticScene::new(m, Vec2::zeros(), Vec2::new(0.2, 0.8), 1.0, alpha, 121)
}

#[test]
fn rate_exponent_examples() {
    let exact: Vec<(f64, f64)> = [10.0, 50.0, 100.0, 500.0, 1000.0].iter().map(|n| (*n, 3.0 / n)).collect();
    assert_abs_diff_eq!(fit_rate_exponent(&exact).unwrap().0, -1.0, epsilon = 1e-10);
    let flat: Vec<(f64, f64)> = exact.iter().map(|(n, _)| (*n, 0.4)).collect();
    assert_abs_diff_eq!(fit_rate_exponent(&flat).unwrap().0, 0.0, epsilon = 1e-12);
    let published = [(10.0, 10.51), (50.0, 2.59), (100.0, 1.10), (500.0, 0.29), (1000.0, 0.13)];
    assert_abs_diff_eq!(fit_rate_exponent(&published).unwrap().0, -0.95, epsilon = 0.03);

    assert!(fit_rate_exponent(&published[..3]).is_err());
    assert!(fit_rate_exponent(&[(1.0, 1.0), (3.0, 1.0), (2.0, 1.0), (4.0, 1.0)]).is_err());
    assert!(fit_rate_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
}

#[test]
fn single_gaussian_hessian_is_closed_form() {
    let beta = 1.5;
    let s = single(Vec2::new(1.0, 0.5), beta);
    let r = check_landscape(&s).unwrap();
    assert!(r.passed, "{}", r.to_record());
    // mu counts only the barrier curvature; L adds the cost's.
    assert_abs_diff_eq!(r.get("mu").unwrap(), beta / (H * H), epsilon = 1e-9);
    assert_abs_diff_eq!(r.get("L").unwrap(), 2.0 + beta / (H * H), epsilon = 1e-9);
    // The finite-difference Hessian equals `(2 + β/h²) I` everywhere.
    let u = Vec2::new(0.1, 0.05);
    let fisher = s.fisher(&u);
    assert!((fisher - Mat2::identity() / (H * H)).norm() < 1e-9);
}

#[test]
fn zero_stiffness_is_flagged_not_checked() {
    let r = check_landscape(&single(Vec2::new(1.0, 0.5), 0.0)).unwrap();
    assert!(r.passed && r.has_flag("beta_zero_skipped"));
}

#[test]
fn saddle_threshold_separates_pass_and_rejection() {
    let above = check_landscape(&pair(0.9, 1.3)).unwrap();
    assert!(above.passed, "{}", above.to_record());
    assert!(matches!(check_landscape(&pair(0.9, 0.8)), Err(CheckError::MultiBasin { modes: 2 })));
}

#[test]
fn contraction_envelope() {
    let s = single(Vec2::new(1.0, 0.5), 1.0);
    let zero = check_contraction(&s, 0, &mut rng::indexed(1, 2, 3)).unwrap();
    // K = 0 compares a value with itself.
    assert_eq!(zero.worst_violation, 0.0);
    let r = check_contraction(&s, 10, &mut rng::indexed(1, 2, 4)).unwrap();
    assert!(r.passed, "{}", r.to_record());
    assert_eq!(r.probes, CONTRACTION_STARTS);
    // The step size is the boundary value 1/L.
    assert_abs_diff_eq!(r.get("eta").unwrap(), 1.0 / (2.0 + 1.0 / (H * H)), epsilon = 1e-12);
    let c = check_contraction(&cluster(2.0), 5, &mut rng::indexed(1, 2, 5)).unwrap();
    assert!(c.passed, "{}", c.to_record());
}

#[test]
fn critical_stiffness_interior_above_threshold() {
    let s = cluster(1.0);
    let geo = critical_stiffness(&s).unwrap();
    let betas: Vec<f64> = [0.1, 1.0, 2.0, 10.0].iter().map(|m| m * geo.beta_star).collect();
    let r = check_critical_stiffness(&s, &betas).unwrap();
    assert!(r.passed, "{}", r.to_record());
    // At 10 β* the minimizer sits at least r_α - G_c/(βκ) - cell inside the set.
    let stiff = s.with_beta(10.0 * geo.beta_star);
    let u = refine_minimizer(&stiff, geo.peak);
    let margin = geo.r_alpha - geo.g_c / (stiff.beta * geo.kappa) - s.grid.cell();
    let b = basin(&stiff).unwrap();
    assert!(b.distance_to_outside(&stiff, &u) >= margin);
}

#[test]
fn goal_at_peak_keeps_minimizer_at_peak() {
    let peak = Vec2::new(0.3, -0.2);
    for beta in [0.01, 1.0, 100.0] {
        let s = single(peak, beta);
        let u = refine_minimizer(&s, Vec2::new(0.25, -0.1));
        assert!((u - peak).norm() < 1e-6, "beta {beta}: {u:?}");
    }
}

#[test]
fn comparator_sensitivity_cases() {
    let a = cluster(2.0);
    let same = check_comparator_sensitivity(&a, &a.clone()).unwrap();
    assert_eq!(same.get("moved"), Some(0.0));
    let delta = Vec2::new(0.03, -0.02);
    let pts = a.model.points().iter().map(|p| p + delta).collect();
    let b = SyntheticScene { model: KdeModel::new(pts, H).unwrap(), ..a.clone() };
    let r = check_comparator_sensitivity(&a, &b).unwrap();
    assert!(r.passed, "{}", r.to_record());
    assert!(r.get("moved").unwrap() > 0.0);
    assert!(matches!(check_comparator_sensitivity(&a, &a.with_beta(4.0)), Err(CheckError::SceneMismatch(_))));
}

#[test]
fn level_set_cases() {
    let a = cluster(1.0);
    let same = check_level_set_stability(&a, &a, a.alpha).unwrap();
    assert_eq!(same.get("hausdorff"), Some(0.0));
    assert!(same.passed);
    let bump = check_level_set_stability(&a, &a.with_offset(1e-3), a.alpha).unwrap();
    assert!(bump.passed, "{}", bump.to_record());
    assert!(matches!(
        check_level_set_stability(&a, &a.with_offset(2.0 * a.alpha), a.alpha),
        Err(CheckError::SmallnessViolated { .. })
    ));
}

#[test]
fn flat_approach_boundary_is_vacuous() {
    // Thresholding a Gaussian just below its peak puts the gradient-free
    // summit inside the boundary tube.
    let s = single(Vec2::new(1.0, 0.5), 1.0);
    let alpha = s.model.density(&Vec2::new(0.3, -0.2)) * (1.0 - 1e-9);
    let r = check_level_set_stability(&s, &s.with_offset(1e-12), alpha).unwrap();
    assert!(r.has_flag("vacuous"), "{}", r.to_record());
}

fn symmetric_contexts(weights: Vec<f64>) -> MixtureScene {
    let comps =
        [Vec2::new(-0.2, 0.0), Vec2::new(0.2, 0.0)].iter().map(|c| KdeModel::new(vec![*c], 0.4).unwrap()).collect();
    MixtureScene::new(weights, comps, 1e-3, 41)
}

#[test]
fn mixture_identity_cases() {
    let one = MixtureScene::new(
        vec![1.0],
        vec![KdeModel::new(vec![Vec2::zeros(), Vec2::new(0.3, 0.1)], 0.3).unwrap()],
        1e-3,
        41,
    );
    let e = one.evaluate(&Vec2::new(0.1, 0.2));
    assert!(e.score_covariance().norm() < 1e-15);
    assert!((e.marginal_hessian() - e.hessians[0]).norm() < 1e-15);
    assert!(check_mixture_hessian(&one, &[Vec2::new(0.1, 0.2), Vec2::new(-0.2, 0.0)]).unwrap().passed);

    let two = symmetric_contexts(vec![0.5, 0.5]);
    let e = two.evaluate(&Vec2::zeros());
    let half = (e.scores[0] - e.scores[1]) / 2.0;
    assert!((e.score_covariance() - half * half.transpose()).norm() < 1e-12);
    assert!(check_mixture_hessian(&two, &[Vec2::zeros(), Vec2::new(0.1, -0.3)]).unwrap().passed);

    let same = KdeModel::new(vec![Vec2::new(0.1, 0.1)], 0.3).unwrap();
    let eq = MixtureScene::new(vec![1.0, 3.0], vec![same.clone(), same], 1e-3, 41);
    let e = eq.evaluate(&Vec2::new(0.4, 0.0));
    assert_abs_diff_eq!(e.posterior[0], 0.25, epsilon = 1e-12);
    assert!(check_mixture_hessian(&eq, &[Vec2::new(0.4, 0.0)]).unwrap().passed);

    let mut r = rng::indexed(9, 9, 9);
    for _ in 0..5 {
        let m = random_mixture(&mut r);
        let probes: Vec<Vec2> = m.components.iter().map(|c| c.points()[0] + Vec2::new(0.05, -0.04)).collect();
        assert!(check_mixture_hessian(&m, &probes).unwrap().passed);
    }
}

#[test]
fn ctx_gap_cases() {
    let single_ctx = MixtureScene::new(vec![1.0], vec![KdeModel::new(vec![Vec2::zeros()], 0.4).unwrap()], 1e-3, 41);
    let r = check_ctx_gap(&single_ctx, 0).unwrap();
    assert!(r.passed, "{}", r.to_record());
    assert!(r.get("sigma2").unwrap().abs() < 1e-12);

    let two = symmetric_contexts(vec![0.5, 0.5]);
    let r = check_ctx_gap(&two, 0).unwrap();
    assert!(r.passed, "{}", r.to_record());
    assert!(r.get("kappa_cond").unwrap() - r.get("kappa_marg").unwrap() > 1e-3);

    let comps =
        vec![KdeModel::new(vec![Vec2::zeros()], 0.4).unwrap(), KdeModel::new(vec![Vec2::new(0.3, 0.0)], 0.3).unwrap()];
    let unequal = MixtureScene::new(vec![0.5, 0.5], comps, 1e-3, 41);
    assert!(matches!(check_ctx_gap(&unequal, 0), Err(CheckError::IdentifiabilityViolated { .. })));
}

#[test]
fn gibbs_map_limits() {
    let peak = Vec2::new(0.3, -0.2);
    let mut flat = single(Vec2::new(1.0, 0.5), 1.0);
    flat.cost_weight = 0.0;
    let r = check_gibbs_map(&flat).unwrap();
    assert!(r.passed, "{}", r.to_record());
    let cell = flat.grid.cell();
    assert!((Vec2::new(r.get("map_x").unwrap(), r.get("map_y").unwrap()) - peak).norm() <= cell);

    let stiff = single(Vec2::new(1.0, 0.5), 1e6);
    let r = check_gibbs_map(&stiff).unwrap();
    assert!(r.passed, "{}", r.to_record());
    assert!((Vec2::new(r.get("map_x").unwrap(), r.get("map_y").unwrap()) - peak).norm() <= stiff.grid.cell());
}

#[test]
fn suite_is_deterministic_and_passes() {
    let a = run_all_checks(7);
    for e in &a {
        assert!(e.ok(), "{}", e.to_record());
        if let Ok(r) = &e.outcome {
            assert_eq!(r.name, e.check);
        }
    }
    assert!(a.iter().any(|e| e.expect_rejection));
    assert_eq!(a, run_all_checks(7));
}
