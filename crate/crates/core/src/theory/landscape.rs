use std::f64::consts::TAU;

use rand::Rng as _;

use super::scene::{argmin_by, boundary, components, interior, local_maxima};
use super::{worst, CheckError, CheckReport, SyntheticScene};
use crate::controller::{plan, CostModel};
use crate::density::find_mode;
use crate::linalg::{fd_hessian, lambda_max, lambda_min, log_sum_exp};
use crate::rng::Rng;
use crate::Vec2;

/// Warm starts drawn by [`check_contraction`].
pub const CONTRACTION_STARTS: usize = 100;
const LANDSCAPE_REL_TOL: f64 = 1e-6;
const CONTRACTION_REL_TOL: f64 = 1e-9;
const REFINE_ITERS: usize = 200_000;
const QUADRATURE_TOL: f64 = 1e-3;

/// Connected piece of the `α`-superlevel set holding the free-energy minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Basin {
    pub mask: Vec<bool>,
    pub density: Vec<f64>,
    pub members: Vec<usize>,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// Grid argmin of `F` over the basin.
    pub argmin: usize,
    /// The single grid density mode of the basin.
    pub mode: usize,
}

/// Locate the basin and enforce that it holds exactly one density mode.
pub fn basin(scene: &SyntheticScene) -> Result<Basin, CheckError> {
    let grid = &scene.grid;
    let density = scene.density_field();
    let mask: Vec<bool> = density.iter().map(|&d| d >= scene.alpha).collect();
    let all: Vec<usize> = (0..grid.len()).filter(|&k| mask[k]).collect();
    let argmin = argmin_by(&all, |k| scene.free_energy(&grid.point_at(k)))
        .ok_or_else(|| CheckError::InvalidScene("empty superlevel set".into()))?;
    let members =
        components(grid, &mask).into_iter().find(|c| c.contains(&argmin)).expect("argmin belongs to a component");
    let modes = local_maxima(grid, &density, &members);
    if modes.len() != 1 {
        return Err(CheckError::MultiBasin { modes: modes.len() });
    }
    Ok(Basin {
        interior: interior(grid, &mask, &members),
        boundary: boundary(grid, &mask, &members),
        mode: modes[0],
        argmin,
        members,
        mask,
        density,
    })
}

impl Basin {
    /// Smallest `λ_min` of the Fisher information over the basin.
    pub fn kappa(&self, scene: &SyntheticScene) -> f64 {
        self.members.iter().map(|&k| lambda_min(&scene.fisher(&scene.grid.point_at(k)))).fold(f64::INFINITY, f64::min)
    }

    /// Distance from `u` to the nearest grid node outside the superlevel set.
    pub fn distance_to_outside(&self, scene: &SyntheticScene, u: &Vec2) -> f64 {
        (0..scene.grid.len())
            .filter(|&k| !self.mask[k])
            .map(|k| (scene.grid.point_at(k) - u).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Gradient descent on `F` from `start` with `η = 1/L` until the step stalls.
pub fn refine_minimizer(scene: &SyntheticScene, start: Vec2) -> Vec2 {
    let eta = 1.0 / (scene.l_c() + scene.beta * scene.model.lambda_max());
    let tol = 1e-14 * (1.0 + start.norm());
    let mut u = start;
    for _ in 0..REFINE_ITERS {
        let step = eta * scene.free_energy_grad(&u);
        u -= step;
        if step.norm() < tol {
            break;
        }
    }
    u
}

fn require_plain(scene: &SyntheticScene) -> Result<(), CheckError> {
    if scene.offset != 0.0 {
        return Err(CheckError::InvalidScene("density offset is only meaningful for level-set checks".into()));
    }
    Ok(())
}

fn positive_kappa(kappa: f64) -> Result<f64, CheckError> {
    if kappa > 0.0 {
        Ok(kappa)
    } else {
        Err(CheckError::NotLogConcave { kappa })
    }
}

/// Strong convexity, smoothness and the PL inequality of `F` on the basin.
///
/// Hessians come from Richardson finite differences of `F`, gradients from
/// the closed-form score.
pub fn check_landscape(scene: &SyntheticScene) -> Result<CheckReport, CheckError> {
    require_plain(scene)?;
    let b = basin(scene)?;
    let grid = &scene.grid;
    let pts: Vec<Vec2> = b.members.iter().map(|&k| grid.point_at(k)).collect();
    let scale = pts.iter().map(|u| scene.free_energy(u).abs()).fold(0.0, f64::max).max(1.0);
    let tol = LANDSCAPE_REL_TOL * scale;
    if scene.beta == 0.0 {
        return Ok(CheckReport::new("landscape", 0.0, tol, 0).param("mu", 0.0).flag("beta_zero_skipped"));
    }
    let kappa = positive_kappa(b.kappa(scene))?;
    let mu = scene.beta * kappa;
    let l = scene.l_c() + scene.beta * scene.model.lambda_max();
    let f_star = scene.free_energy(&grid.point_at(b.argmin));
    let step = 0.01 * scene.bandwidth();
    let violations = b.interior.iter().flat_map(|&k| {
        let u = grid.point_at(k);
        let h = fd_hessian(|v| scene.free_energy(&v), u, step);
        let g = scene.free_energy_grad(&u);
        let pl = 2.0 * mu * (scene.free_energy(&u) - f_star) - g.norm_squared();
        [mu - lambda_min(&h), lambda_max(&h) - l, pl]
    });
    let w = worst(violations);
    Ok(CheckReport::new("landscape", w, tol, b.interior.len())
        .param("mu", mu)
        .param("L", l)
        .param("kappa", kappa)
        .param("beta", scene.beta))
}

/// Function-value contraction of [`plan`] at `η = 1/L` from random warm
/// starts inside the ball around `u*` that fits in the superlevel set.
pub fn check_contraction(scene: &SyntheticScene, k: usize, rng: &mut Rng) -> Result<CheckReport, CheckError> {
    require_plain(scene)?;
    if scene.cost_weight != 1.0 {
        return Err(CheckError::InvalidScene("the planner uses a unit-weight tracking cost".into()));
    }
    let b = basin(scene)?;
    let grid = &scene.grid;
    let kappa = positive_kappa(b.kappa(scene))?;
    let mu = scene.beta * kappa;
    let l = scene.l_c() + scene.beta * scene.model.lambda_max();
    let eta = 1.0 / l;
    let u_star = refine_minimizer(scene, grid.point_at(b.argmin));
    let f_star = scene.free_energy(&u_star).min(scene.free_energy(&grid.point_at(b.argmin)));
    let radius = b.distance_to_outside(scene, &u_star) - grid.cell();
    if !(radius > 0.0) {
        return Err(CheckError::InvalidScene("minimizer sits on the level-set boundary".into()));
    }
    let cost = CostModel::new(scene.q, scene.goal, f64::INFINITY);
    let rate = (1.0 - eta * mu).powi(k as i32);
    let mut scale: f64 = 1.0;
    let mut violations = Vec::with_capacity(CONTRACTION_STARTS);
    for _ in 0..CONTRACTION_STARTS {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = TAU * rng.random::<f64>();
        let u0 = u_star + Vec2::new(theta.cos(), theta.sin()) * r;
        let u_k = plan(&cost, |u| scene.model.score(u), scene.beta, eta, k, u0).action;
        let gap0 = scene.free_energy(&u0) - f_star;
        scale = scale.max(scene.free_energy(&u0).abs());
        violations.push(scene.free_energy(&u_k) - f_star - rate * gap0);
    }
    Ok(CheckReport::new("contraction", worst(violations), CONTRACTION_REL_TOL * scale, CONTRACTION_STARTS)
        .param("K", k as f64)
        .param("eta", eta)
        .param("mu", mu)
        .param("ball_radius", radius))
}

/// Grid-measured quantities entering the critical stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessGeometry {
    pub kappa: f64,
    pub r_alpha: f64,
    /// Largest `‖∇c‖` over the basin.
    pub g_c: f64,
    pub peak: Vec2,
    pub beta_star: f64,
}

/// `κ`, `r_α`, `G_c`, `ū` and `β* = G_c/(κ r_α)` measured on the basin.
pub fn critical_stiffness(scene: &SyntheticScene) -> Result<StiffnessGeometry, CheckError> {
    require_plain(scene)?;
    let b = basin(scene)?;
    let grid = &scene.grid;
    let kappa = positive_kappa(b.kappa(scene))?;
    let peak = find_mode(&scene.model, grid.point_at(b.mode));
    let r_alpha = b.distance_to_outside(scene, &peak);
    let g_c = b.members.iter().map(|&k| scene.cost_grad(&grid.point_at(k)).norm()).fold(0.0, f64::max);
    Ok(StiffnessGeometry { kappa, r_alpha, g_c, peak, beta_star: g_c / (kappa * r_alpha) })
}

/// For every `β > β*` the grid argmin of `F` is strictly inside the level set
/// and within `G_c/(βκ)` plus one cell of the density peak.
///
/// Each `β` also records whether the argmin was inside and its task cost, so
/// the transition below `β*` is visible in the report.
pub fn check_critical_stiffness(scene: &SyntheticScene, betas: &[f64]) -> Result<CheckReport, CheckError> {
    let geo = critical_stiffness(scene)?;
    let grid = &scene.grid;
    let all: Vec<usize> = (0..grid.len()).collect();
    let mut violations = Vec::new();
    let mut params = Vec::new();
    let mut flags = Vec::new();
    for &beta in betas {
        let s = scene.with_beta(beta);
        let k = argmin_by(&all, |k| s.free_energy(&grid.point_at(k))).expect("grid is non-empty");
        let u = grid.point_at(k);
        let inside = s.density(&u) > s.alpha;
        let ratio = beta / geo.beta_star;
        params.push((format!("inside@{ratio:.3}"), inside as u8 as f64));
        params.push((format!("cost@{ratio:.3}"), s.cost(&u)));
        if beta > geo.beta_star {
            let bound = geo.g_c / (beta * geo.kappa) + grid.cell();
            violations.push((u - geo.peak).norm() - bound);
            if !inside {
                flags.push(format!("outside@{ratio:.3}"));
                violations.push(f64::INFINITY);
            }
        }
    }
    let probes = violations.len();
    let mut r = CheckReport::new("critical_stiffness", worst(violations), 1e-9, probes)
        .param("beta_star", geo.beta_star)
        .param("kappa", geo.kappa)
        .param("r_alpha", geo.r_alpha)
        .param("g_c", geo.g_c);
    r.parameters.extend(params);
    r.flags.extend(flags);
    Ok(r)
}

/// `‖u*_t - u*_{t-1}‖ ≤ max ‖s_t - s_{t-1}‖ / κ` for two scenes sharing
/// cost and stiffness.
pub fn check_comparator_sensitivity(a: &SyntheticScene, b: &SyntheticScene) -> Result<CheckReport, CheckError> {
    if a.beta != b.beta {
        return Err(CheckError::SceneMismatch("stiffness".into()));
    }
    if a.q != b.q || a.goal != b.goal || a.cost_weight != b.cost_weight {
        return Err(CheckError::SceneMismatch("task cost".into()));
    }
    if a.grid != b.grid {
        return Err(CheckError::SceneMismatch("grid".into()));
    }
    require_plain(a)?;
    require_plain(b)?;
    let (ba, bb) = (basin(a)?, basin(b)?);
    let kappa = positive_kappa(ba.kappa(a).min(bb.kappa(b)))?;
    let grid = &a.grid;
    let ua = refine_minimizer(a, grid.point_at(ba.argmin));
    let ub = refine_minimizer(b, grid.point_at(bb.argmin));
    if a.density(&ua) < a.alpha || b.density(&ub) < b.alpha {
        return Err(CheckError::InvalidScene("minimizer is not interior".into()));
    }
    let union: Vec<usize> = (0..grid.len()).filter(|&k| ba.mask[k] || bb.mask[k]).collect();
    let drift = union
        .iter()
        .map(|&k| {
            let u = grid.point_at(k);
            (a.model.score_unchecked(&u) - b.model.score_unchecked(&u)).norm()
        })
        .fold(0.0, f64::max);
    let bound = drift / kappa;
    let moved = (ua - ub).norm();
    let tol = 1e-6 * (grid.max - grid.min).norm();
    Ok(CheckReport::new("comparator_sensitivity", moved - bound, tol, union.len())
        .param("moved", moved)
        .param("bound", bound)
        .param("kappa", kappa)
        .param("score_drift", drift))
}

fn gibbs_log_z(scene: &SyntheticScene, grid: &super::GridSpec) -> f64 {
    let s = grid.step();
    let terms: Vec<f64> =
        grid.points().iter().map(|u| scene.model.log_density(u) - scene.cost(u) / scene.beta).collect();
    log_sum_exp(&terms) + (s.x * s.y).ln()
}

/// The grid MAP of the Gibbs policy `p̂ e^{-c/β} / Z` and the grid argmin of
/// `F` coincide cell for cell.
///
/// The violation is measured in coarse cells: the Chebyshev index distance
/// between the two optima, and how far refining the grid moves the argmin
/// beyond one coarse cell.
pub fn check_gibbs_map(scene: &SyntheticScene) -> Result<CheckReport, CheckError> {
    require_plain(scene)?;
    if !(scene.beta > 0.0) {
        return Err(CheckError::InvalidScene("the Gibbs policy needs a positive temperature".into()));
    }
    let grid = &scene.grid;
    let log_z = gibbs_log_z(scene, grid);
    let fine = grid.refined();
    let change = (gibbs_log_z(scene, &fine) - log_z).abs();
    if !log_z.is_finite() {
        return Err(CheckError::InvalidScene("partition function is not finite".into()));
    }
    if change > QUADRATURE_TOL {
        return Err(CheckError::QuadratureNotConverged { change });
    }
    let pts = grid.points();
    let all: Vec<usize> = (0..pts.len()).collect();
    let map = argmin_by(&all, |k| {
        let u = &pts[k];
        -(scene.model.log_density(u) - scene.cost(u) / scene.beta - log_z).exp()
    })
    .expect("grid is non-empty");
    let argmin = argmin_by(&all, |k| scene.free_energy(&pts[k])).expect("grid is non-empty");
    let n = grid.resolution;
    let cheb = |a: usize, b: usize| ((a / n).abs_diff(b / n)).max((a % n).abs_diff(b % n)) as f64;

    let fine_all: Vec<usize> = (0..fine.len()).collect();
    let fine_argmin = argmin_by(&fine_all, |k| scene.free_energy(&fine.point_at(k))).expect("grid is non-empty");
    let shift = (fine.point_at(fine_argmin) - grid.point_at(argmin)).abs();
    let step = grid.step();
    let shift_cells = (shift.x / step.x).max(shift.y / step.y);
    let w = cheb(map, argmin).max(shift_cells - 1.0);
    Ok(CheckReport::new("gibbs_map", w, 1e-9, pts.len())
        .param("log_z", log_z)
        .param("refinement_log_z_change", change)
        .param("refinement_shift_cells", shift_cells)
        .param("map_x", pts[map].x)
        .param("map_y", pts[map].y))
}
