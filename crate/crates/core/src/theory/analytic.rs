use std::f64::consts::PI;

use rand::Rng as _;

use super::{worst, CheckReport};
use crate::controller::{plan, CostModel};
use crate::density::{find_mode, KdeModel};
use crate::linalg::{fd_gradient, fd_hessian};
use crate::rng::Rng;
use crate::{Mat2, Vec2};

const SCORE_REL_TOL: f64 = 1e-5;
const FISHER_REL_TOL: f64 = 1e-4;
const CLOSED_FORM_TOL: f64 = 1e-6;

/// KDE with 3 to 8 centers in `[-1, 1]²` and bandwidth in `[0.2, 0.5]`.
pub fn random_kde(rng: &mut Rng) -> KdeModel {
    let n = rng.random_range(3..=8);
    let points = (0..n).map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    KdeModel::new(points, rng.random_range(0.2..0.5)).expect("valid random KDE")
}

/// A point within two bandwidths of a random center.
fn probe_near(model: &KdeModel, rng: &mut Rng) -> Vec2 {
    let c = model.points()[rng.random_range(0..model.len())];
    let h = model.bandwidth();
    c + Vec2::new(rng.random_range(-2.0 * h..2.0 * h), rng.random_range(-2.0 * h..2.0 * h))
}

/// Closed-form score against Richardson differences of `ln p̂`.
///
/// The error is relative to `max(‖ŝ‖, 1/h)`, the natural score scale, so
/// probes near a mode where the score vanishes stay well posed.
pub fn check_score_consistency(rng: &mut Rng, models: usize, points: usize) -> CheckReport {
    let mut violations = Vec::with_capacity(models * points);
    for _ in 0..models {
        let m = random_kde(rng);
        let h = m.bandwidth();
        for _ in 0..points {
            let u = probe_near(&m, rng);
            let s = m.score_unchecked(&u);
            let fd = fd_gradient(|v| m.log_density(&v), u, 1e-3 * h);
            violations.push((fd - s).norm() / s.norm().max(1.0 / h));
        }
    }
    CheckReport::new("kde_score", worst(violations), SCORE_REL_TOL, models * points)
}

/// Closed-form Fisher information against the Richardson Hessian of `-ln p̂`,
/// with the Frobenius error relative to `max(‖I‖, Λ)`.
pub fn check_fisher_consistency(rng: &mut Rng, models: usize, points: usize) -> CheckReport {
    let mut violations = Vec::with_capacity(models * points);
    for _ in 0..models {
        let m = random_kde(rng);
        let h = m.bandwidth();
        for _ in 0..points {
            let u = probe_near(&m, rng);
            let fisher = m.evaluate_unchecked(&u).fisher;
            let fd = -fd_hessian(|v| m.log_density(&v), u, 1e-2 * h);
            violations.push((fd - fisher).norm() / fisher.norm().max(m.lambda_max()));
        }
    }
    CheckReport::new("kde_fisher", worst(violations), FISHER_REL_TOL, models * points)
}

/// Single-kernel identities: peak `1/(2πh²)`, score `(U - u)/h²`, Fisher
/// `I/h²`, and the planner fixed point `(2v + (β/h²)U)/(2 + β/h²)` for the
/// cost `‖u - v‖²`. Errors are relative to each quantity's magnitude.
pub fn check_single_gaussian(rng: &mut Rng, cases: usize) -> CheckReport {
    let mut violations = Vec::new();
    for _ in 0..cases {
        let c = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let h = rng.random_range(0.1..0.6);
        let m = KdeModel::new(vec![c], h).expect("valid bandwidth");
        let peak = 1.0 / (2.0 * PI * h * h);
        violations.push((m.density(&c) - peak).abs() / peak);
        violations.push((find_mode(&m, c + Vec2::new(0.3 * h, -0.2 * h)) - c).norm() / h);

        let u = probe_near(&m, rng);
        let score = (c - u) / (h * h);
        violations.push((m.score_unchecked(&u) - score).norm() / score.norm().max(1.0 / h));
        let fisher = Mat2::identity() / (h * h);
        violations.push((m.evaluate_unchecked(&u).fisher - fisher).norm() / fisher.norm());

        let v = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let beta = rng.random_range(0.05..5.0);
        let k = beta / (h * h);
        let fixed = (2.0 * v + k * c) / (2.0 + k);
        let cost = CostModel::new(Vec2::zeros(), v, f64::INFINITY);
        let eta = 1.0 / (2.0 + beta * m.lambda_max());
        // The iteration contracts by at most 1 - 2η per step.
        let steps = (40.0 / (2.0 * eta)).ceil() as usize;
        let planned = plan(&cost, |x| m.score(x), beta, eta, steps, c).action;
        violations.push((planned - fixed).norm() / fixed.norm().max(h));
    }
    CheckReport::new("single_gaussian", worst(violations), CLOSED_FORM_TOL, cases)
}
