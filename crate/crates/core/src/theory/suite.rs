use rand::Rng as _;
use rayon::prelude::*;

use super::*;
use crate::density::KdeModel;
use crate::rng;
use crate::Vec2;

/// Stream id of the check suite's random draws.
const SUITE_STREAM: u64 = 0x7468_656f;
const SCENE_RESOLUTION: usize = 121;
const GIBBS_RESOLUTION: usize = 401;
/// Stiffness multiples of `β*` swept by the critical-stiffness check.
const STIFFNESS_MULTIPLES: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
const MIXTURE_SCENES: usize = 20;
const MIXTURE_PROBES: usize = 10;

type NamedScene = (&'static str, fn() -> SyntheticScene);

/// One check applied to one scene family.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub check: String,
    pub family: String,
    pub outcome: Result<CheckReport, CheckError>,
    /// The scene deliberately violates the check's hypothesis.
    pub expect_rejection: bool,
}

impl SuiteEntry {
    fn new(check: &str, family: &str, outcome: Result<CheckReport, CheckError>) -> Self {
        Self { check: check.to_string(), family: family.to_string(), outcome, expect_rejection: false }
    }

    fn rejected(check: &str, family: &str, outcome: Result<CheckReport, CheckError>) -> Self {
        Self { expect_rejection: true, ..Self::new(check, family, outcome) }
    }

    /// A report that passed, or a rejection that was expected.
    pub fn ok(&self) -> bool {
        match (&self.outcome, self.expect_rejection) {
            (Ok(r), false) => r.passed,
            (Err(_), true) => true,
            _ => false,
        }
    }

    pub fn to_record(&self) -> String {
        let status = if self.ok() { "ok" } else { "FAIL" };
        match &self.outcome {
            Ok(r) => format!("{status} family={} {}", self.family, r.to_record()),
            Err(e) => {
                let note = if self.expect_rejection { "expected rejection" } else { "rejected" };
                format!("{status} family={} check={} {note}: {e}", self.family, self.check)
            }
        }
    }
}

fn single_gaussian_scene() -> SyntheticScene {
    let c = Vec2::new(0.3, -0.2);
    let m = KdeModel::new(vec![c], 0.3).expect("valid bandwidth");
    let alpha = 0.2 * m.density(&c);
    SyntheticScene::new(m, Vec2::zeros(), Vec2::new(1.5, 0.5), 1.0, alpha, SCENE_RESOLUTION)
}

fn cluster_points() -> Vec<Vec2> {
    (0..6)
        .map(|i| {
            let t = i as f64 * 1.1;
            Vec2::new(0.15 * t.cos(), 0.1 * t.sin())
        })
        .collect()
}

fn cluster_scene() -> SyntheticScene {
    let m = KdeModel::new(cluster_points(), 0.3).expect("valid bandwidth");
    let alpha = 0.3 * m.density(&Vec2::zeros());
    SyntheticScene::new(m, Vec2::new(0.2, 0.1), Vec2::new(1.4, -0.9), 2.0, alpha, SCENE_RESOLUTION)
}

fn two_point_model() -> KdeModel {
    KdeModel::new(vec![Vec2::new(-0.6, 0.0), Vec2::new(0.6, 0.0)], 0.25).expect("valid bandwidth")
}

/// Two separated kernels with `α` a multiple of the saddle density.
pub(crate) fn two_point_scene(saddle_multiple: f64) -> SyntheticScene {
    let m = two_point_model();
    let alpha = saddle_multiple * m.density(&Vec2::zeros());
    SyntheticScene::new(m, Vec2::zeros(), Vec2::new(1.2, 0.4), 1.0, alpha, SCENE_RESOLUTION)
}

fn translated(scene: &SyntheticScene, delta: Vec2) -> SyntheticScene {
    let pts = scene.model.points().iter().map(|p| p + delta).collect();
    let model = KdeModel::new(pts, scene.bandwidth()).expect("valid bandwidth");
    SyntheticScene { model, ..scene.clone() }
}

fn gaussian_contexts(centers: &[Vec2], bandwidths: &[f64], alpha: f64) -> MixtureScene {
    let comps = centers.iter().zip(bandwidths).map(|(c, h)| KdeModel::new(vec![*c], *h).expect("valid")).collect();
    let weights = (0..centers.len()).map(|i| 1.0 + 0.25 * i as f64).collect();
    let mut m = MixtureScene::new(weights, comps, alpha, 81);
    m.goal = Vec2::new(1.0, 0.5);
    m
}

/// Three single-Gaussian contexts at the corners of a triangle.
pub(crate) fn triangle_contexts() -> MixtureScene {
    let centers = [Vec2::zeros(), Vec2::new(0.3, 0.0), Vec2::new(0.15, 0.26)];
    gaussian_contexts(&centers, &[0.4; 3], 0.5)
}

type Job = Box<dyn Fn() -> SuiteEntry + Send + Sync>;

/// Every check on its scene families, in a fixed order, evaluated in parallel.
pub fn run_all_checks(seed: u64) -> Vec<SuiteEntry> {
    let draw = move |index: u64| rng::indexed(seed, SUITE_STREAM, index);
    let mut jobs: Vec<Job> = vec![
        Box::new(move || {
            SuiteEntry::new("kde_score", "random_kde", Ok(check_score_consistency(&mut draw(0), 50, 1000)))
        }),
        Box::new(move || {
            SuiteEntry::new("kde_fisher", "random_kde", Ok(check_fisher_consistency(&mut draw(1), 50, 200)))
        }),
        Box::new(move || {
            SuiteEntry::new("single_gaussian", "single_kernel", Ok(check_single_gaussian(&mut draw(2), 50)))
        }),
    ];
    let scenes: [NamedScene; 3] = [
        ("single_gaussian", single_gaussian_scene),
        ("cluster", cluster_scene),
        ("two_point_above_saddle", || two_point_scene(3.0)),
    ];
    for (i, (name, make)) in scenes.into_iter().enumerate() {
        jobs.push(Box::new(move || SuiteEntry::new("landscape", name, check_landscape(&make()))));
        for (j, k) in [0usize, 1, 10, 50].into_iter().enumerate() {
            let idx = 10 + 10 * i as u64 + j as u64;
            jobs.push(Box::new(move || {
                SuiteEntry::new("contraction", name, check_contraction(&make(), k, &mut draw(idx)))
            }));
        }
    }
    jobs.push(Box::new(|| {
        SuiteEntry::rejected("landscape", "two_point_below_saddle", check_landscape(&two_point_scene(0.8)))
    }));

    for (name, make) in
        [("single_gaussian", single_gaussian_scene as fn() -> SyntheticScene), ("cluster", cluster_scene)]
    {
        jobs.push(Box::new(move || {
            let scene = make();
            let outcome = critical_stiffness(&scene).and_then(|geo| {
                let betas: Vec<f64> = STIFFNESS_MULTIPLES.iter().map(|m| m * geo.beta_star).collect();
                check_critical_stiffness(&scene, &betas)
            });
            SuiteEntry::new("critical_stiffness", name, outcome)
        }));
        jobs.push(Box::new(move || {
            let a = make();
            SuiteEntry::new(
                "comparator_sensitivity",
                name,
                check_comparator_sensitivity(&a, &translated(&a, Vec2::new(0.05, 0.02))),
            )
        }));
        jobs.push(Box::new(move || {
            let a = make();
            SuiteEntry::new("comparator_sensitivity", name, check_comparator_sensitivity(&a, &a.clone()))
        }));
    }
    jobs.push(Box::new(|| {
        let a = cluster_scene();
        SuiteEntry::rejected(
            "comparator_sensitivity",
            "stiffness_changed",
            check_comparator_sensitivity(&a, &a.with_beta(2.0 * a.beta)),
        )
    }));

    jobs.push(Box::new(|| {
        let a = cluster_scene();
        SuiteEntry::new("level_set_stability", "identical", check_level_set_stability(&a, &a, a.alpha))
    }));
    jobs.push(Box::new(|| {
        let a = cluster_scene();
        SuiteEntry::new(
            "level_set_stability",
            "uniform_bump",
            check_level_set_stability(&a, &a.with_offset(1e-3), a.alpha),
        )
    }));
    jobs.push(Box::new(move || {
        let a = cluster_scene();
        let mut r = draw(3);
        let pts = a.model.points().iter().map(|p| p + Vec2::new(r.random_range(-0.02..0.02), 0.0)).collect();
        let b = SyntheticScene { model: KdeModel::new(pts, a.bandwidth()).expect("valid"), ..a.clone() };
        SuiteEntry::new("level_set_stability", "jittered_centers", check_level_set_stability(&a, &b, a.alpha))
    }));

    jobs.push(Box::new(move || {
        let mut rng = draw(4);
        let mut reports = Vec::new();
        for _ in 0..MIXTURE_SCENES {
            let m = random_mixture(&mut rng);
            let probes: Vec<Vec2> = (0..MIXTURE_PROBES)
                .map(|_| {
                    let c = &m.components[rng.random_range(0..m.components.len())];
                    let p = c.points()[rng.random_range(0..c.len())];
                    p + Vec2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3))
                })
                .collect();
            match check_mixture_hessian(&m, &probes) {
                Ok(r) => reports.push(r),
                Err(e) => return SuiteEntry::new("mixture_hessian", "random_mixtures", Err(e)),
            }
        }
        let w = reports.iter().map(|r| r.worst_violation).fold(f64::NEG_INFINITY, f64::max);
        let probes = reports.iter().map(|r| r.probes).sum();
        let report = CheckReport::new("mixture_hessian", w, reports[0].tolerance, probes)
            .param("mixtures", MIXTURE_SCENES as f64);
        SuiteEntry::new("mixture_hessian", "random_mixtures", Ok(report))
    }));

    jobs.push(Box::new(|| SuiteEntry::new("ctx_gap", "triangle_contexts", check_ctx_gap(&triangle_contexts(), 0))));
    jobs.push(Box::new(|| {
        let m = gaussian_contexts(&[Vec2::zeros(), Vec2::new(0.3, 0.1)], &[0.4, 0.4], 0.5);
        SuiteEntry::new("ctx_gap", "two_contexts", check_ctx_gap(&m, 1))
    }));
    jobs.push(Box::new(|| {
        let m = gaussian_contexts(&[Vec2::zeros(), Vec2::new(0.3, 0.1)], &[0.4, 0.3], 0.5);
        SuiteEntry::rejected("ctx_gap", "unequal_bandwidths", check_ctx_gap(&m, 0))
    }));

    jobs.push(Box::new(|| {
        let scene = cluster_scene();
        let grid = covering_grid(&scene.model, scene.alpha, GIBBS_RESOLUTION);
        SuiteEntry::new("gibbs_map", "cluster", check_gibbs_map(&scene.with_grid(grid)))
    }));

    jobs.par_iter().map(|job| job()).collect()
}
