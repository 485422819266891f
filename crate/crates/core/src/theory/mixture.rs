use rand::Rng as _;

use super::analytic::random_kde;
use super::{worst, CheckError, CheckReport, MixtureScene};
use crate::density::UNDERFLOW_LOG;
use crate::linalg::{fd_hessian, lambda_max, lambda_min};
use crate::rng::Rng;
use crate::Vec2;

const HESSIAN_REL_TOL: f64 = 1e-5;
const IDENTIFIABILITY_TOL: f64 = 1e-9;

/// Random discrete-context mixture of 2 to 4 small KDEs with random weights.
pub fn random_mixture(rng: &mut Rng) -> MixtureScene {
    let contexts = rng.random_range(2..=4);
    let components = (0..contexts).map(|_| random_kde(rng)).collect();
    let weights = (0..contexts).map(|_| rng.random_range(0.2..1.0)).collect();
    MixtureScene::new(weights, components, 1e-3, 41)
}

/// `∇² ln p_marg(u)` by finite differences against
/// `E_w[∇² ln p(u|ξ)] + Cov_w(s(u|ξ))` at every probe.
///
/// The violation is the Frobenius error relative to `max(1, ‖closed form‖)`.
/// Halving the difference step must move the estimate by less than four
/// times the tolerance, which guards against an unresolved step.
pub fn check_mixture_hessian(scene: &MixtureScene, probes: &[Vec2]) -> Result<CheckReport, CheckError> {
    let h_min = scene.components.iter().map(|c| c.bandwidth()).fold(f64::INFINITY, f64::min);
    let step = 0.01 * h_min;
    let mut violations = Vec::with_capacity(2 * probes.len());
    for u in probes {
        if scene.components.iter().any(|c| c.log_density(u) < UNDERFLOW_LOG) {
            return Err(CheckError::InvalidScene("a conditional density vanishes at a probe".into()));
        }
        let closed = scene.evaluate(u).marginal_hessian();
        let scale = closed.norm().max(1.0);
        let fd = fd_hessian(|v| scene.log_marginal(&v), *u, step);
        let fd_half = fd_hessian(|v| scene.log_marginal(&v), *u, 0.5 * step);
        violations.push((fd - closed).norm() / scale);
        violations.push((fd - fd_half).norm() / scale / 4.0);
    }
    Ok(CheckReport::new("mixture_hessian", worst(violations), HESSIAN_REL_TOL, probes.len())
        .param("contexts", scene.components.len() as f64)
        .param("fd_step", step))
}

/// Curvature gap between the context-aware and the marginal barrier.
///
/// On the marginal `α`-superlevel set, `κ_cond - κ_marg ≥ σ²` with
/// `σ² = min λ_min(Cov_w(s))`, and the safety-bound gap
/// `G_c (κ_cond - κ_marg)/(β κ_cond κ_marg)` dominates the residual
/// `G_c σ²/(β κ_cond κ_marg)`. `context` picks the conditioning context.
/// Conditional Hessians must agree across contexts at every node of the set.
pub fn check_ctx_gap(scene: &MixtureScene, context: usize) -> Result<CheckReport, CheckError> {
    assert!(context < scene.components.len());
    let grid = &scene.grid;
    let set: Vec<Vec2> = grid.points().into_iter().filter(|u| scene.marginal(u) >= scene.alpha).collect();
    if set.is_empty() {
        return Err(CheckError::InvalidScene("empty superlevel set".into()));
    }
    let evals: Vec<_> = set.iter().map(|u| scene.evaluate(u)).collect();
    let spread = evals
        .iter()
        .flat_map(|e| e.hessians.iter().map(move |h| (h - e.hessians[0]).norm() / e.hessians[0].norm().max(1.0)))
        .fold(0.0, f64::max);
    if spread > IDENTIFIABILITY_TOL {
        return Err(CheckError::IdentifiabilityViolated { spread });
    }
    let kappa_cond = evals.iter().map(|e| lambda_min(&-e.hessians[context])).fold(f64::INFINITY, f64::min);
    let kappa_marg = evals.iter().map(|e| lambda_min(&-e.marginal_hessian())).fold(f64::INFINITY, f64::min);
    let sigma2 = evals.iter().map(|e| lambda_min(&e.score_covariance())).fold(f64::INFINITY, f64::min);
    let tol = IDENTIFIABILITY_TOL * kappa_cond.abs().max(1.0);
    let mut violations = vec![sigma2 - (kappa_cond - kappa_marg)];
    let g_c = scene.cost_gradient_bound(&set);
    let mut report_flags = Vec::new();
    let (mut bound_gap, mut residual) = (f64::NAN, f64::NAN);
    if kappa_marg > 0.0 {
        let denom = scene.beta * kappa_cond * kappa_marg;
        bound_gap = g_c * (kappa_cond - kappa_marg) / denom;
        residual = g_c * sigma2 / denom;
        violations.push((residual - bound_gap) / kappa_cond.max(1.0));
    } else {
        report_flags.push("marginal_bound_unbounded".to_string());
    }
    let mut r = CheckReport::new("ctx_gap", worst(violations), tol, set.len())
        .param("kappa_cond", kappa_cond)
        .param("kappa_marg", kappa_marg)
        .param("sigma2", sigma2)
        .param("max_cov_eigen", evals.iter().map(|e| lambda_max(&e.score_covariance())).fold(0.0, f64::max))
        .param("bound_gap", bound_gap)
        .param("residual_gap", residual);
    r.flags = report_flags;
    Ok(r)
}
