use std::f64::consts::TAU;

use super::{DensityError, KdeModel};
use crate::linalg::{lambda_min, percentile};
use crate::Vec2;

/// Lower clamp on the barrier-curvature estimate.
pub const KAPPA_FLOOR: f64 = 1e-3;
/// Number of rays used to measure the level-set radius.
pub const RAY_COUNT: usize = 16;
const BISECTION_ITERS: usize = 32;
const MODE_ITERS: usize = 200;

/// Which curvature statistic becomes `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurvatureRule {
    /// Smallest `λ_min(I)` over the boundary band and the ray boundary points.
    #[default]
    FisherMin,
    /// Smallest curvature of `-ln p̂` along the score direction `n̂ᵀ I n̂` at
    /// the ray boundary points: how sharply the log-density rises toward the
    /// interior across the level set.
    BoundaryNormal,
}

/// Curvature summary of a learned level set.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEstimate {
    /// Barrier curvature `κ`.
    pub kappa: f64,
    /// `Λ = 1/h²`.
    pub lambda_max: f64,
    pub r_alpha: f64,
    pub alpha: f64,
    /// `G_c / (κ r_α)`.
    pub beta_star: f64,
    /// Density peak `ū`.
    pub density_peak: Vec2,
    pub peak_density: f64,
    /// Set when the raw statistic fell to or below the floor.
    pub floor_engaged: bool,
    /// Unclamped smallest `λ_min(I)` over the boundary band.
    pub fisher_min: f64,
    /// Ray-bisection boundary points, one per ray.
    pub boundary: Vec<Vec2>,
}

/// `α` = `p`-th percentile of the densities at `probes`.
pub fn select_alpha(model: &KdeModel, probes: &[Vec2], p: f64) -> f64 {
    let densities: Vec<f64> = probes.iter().map(|u| model.density(u)).collect();
    percentile(&densities, p)
}

/// Densities at `probes`, for callers that need both `α` and the curvature.
pub fn probe_densities(model: &KdeModel, probes: &[Vec2]) -> Vec<f64> {
    probes.iter().map(|u| model.density(u)).collect()
}

/// Mean-shift ascent `u ← Σ rᵢ Uᵢ` (equivalently `u + h² ŝ(u)`) to a local mode.
pub fn find_mode(model: &KdeModel, start: Vec2) -> Vec2 {
    let h2 = model.bandwidth() * model.bandwidth();
    let tol = 1e-8 * model.bandwidth();
    let mut u = start;
    for _ in 0..MODE_ITERS {
        let Ok(s) = model.score(&u) else { return u };
        let step = s * h2;
        u += step;
        if step.norm() < tol {
            break;
        }
    }
    u
}

/// Distance along `dir` from `from` to the first crossing of `density = alpha`.
fn ray_crossing(model: &KdeModel, from: Vec2, dir: Vec2, alpha: f64, max_dist: f64) -> f64 {
    let step = model.bandwidth();
    let mut inside = 0.0;
    let mut outside = None;
    let mut s = step;
    while s <= max_dist + step {
        if model.density(&(from + dir * s)) < alpha {
            outside = Some(s);
            break;
        }
        inside = s;
        s += step;
    }
    let Some(mut hi) = outside else {
        return max_dist;
    };
    let mut lo = inside;
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if model.density(&(from + dir * mid)) >= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Estimate `(κ, Λ, r_α, α, β*, ū)` from `probes`.
///
/// `ū` is the mode reached by mean shift from the densest probe. `r_α` is the
/// shortest of [`RAY_COUNT`] bisected ray distances from `ū` to the level
/// `α`. `κ` is the smallest `λ_min` of the Fisher information over the
/// boundary band (probes with density in `[α, 1.5α]` plus the ray boundary
/// points), clamped below at [`KAPPA_FLOOR`].
pub fn estimate_curvature(
    model: &KdeModel,
    alpha: f64,
    g_c: f64,
    probes: &[Vec2],
) -> Result<CurvatureEstimate, DensityError> {
    estimate_curvature_with(model, alpha, g_c, probes, CurvatureRule::FisherMin)
}

/// [`estimate_curvature`] with an explicit choice of curvature statistic.
pub fn estimate_curvature_with(
    model: &KdeModel,
    alpha: f64,
    g_c: f64,
    probes: &[Vec2],
    rule: CurvatureRule,
) -> Result<CurvatureEstimate, DensityError> {
    let densities = probe_densities(model, probes);
    estimate_curvature_from(model, alpha, g_c, probes, &densities, rule)
}

/// [`estimate_curvature_with`] reusing precomputed probe densities.
pub fn estimate_curvature_from(
    model: &KdeModel,
    alpha: f64,
    g_c: f64,
    probes: &[Vec2],
    densities: &[f64],
    rule: CurvatureRule,
) -> Result<CurvatureEstimate, DensityError> {
    assert!(alpha > 0.0, "level threshold must be positive");
    assert_eq!(probes.len(), densities.len());
    let (best, &best_density) = densities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(DensityError::NoInteriorPoint { alpha })?;
    if best_density < alpha {
        return Err(DensityError::NoInteriorPoint { alpha });
    }
    let peak = find_mode(model, probes[best]);
    let peak_density = model.density(&peak);

    let reach = model.points().iter().map(|p| (p - peak).norm()).fold(0.0, f64::max) + 10.0 * model.bandwidth();
    let boundary: Vec<Vec2> = (0..RAY_COUNT)
        .map(|k| {
            let theta = TAU * k as f64 / RAY_COUNT as f64;
            let dir = Vec2::new(theta.cos(), theta.sin());
            peak + dir * ray_crossing(model, peak, dir, alpha, reach)
        })
        .collect();
    let r_alpha = boundary.iter().map(|b| (b - peak).norm()).fold(f64::INFINITY, f64::min);

    let band = probes
        .iter()
        .zip(densities)
        .filter(|(_, &d)| d >= alpha && d <= 1.5 * alpha)
        .map(|(u, _)| u)
        .chain(boundary.iter());
    let fisher_min =
        band.filter_map(|u| model.fisher_info(u).ok()).map(|f| lambda_min(&f)).fold(f64::INFINITY, f64::min);
    let raw = match rule {
        CurvatureRule::FisherMin => fisher_min,
        CurvatureRule::BoundaryNormal => boundary
            .iter()
            .filter_map(|b| model.evaluate(b).ok())
            .filter(|e| e.score.norm() > 0.0)
            .map(|e| {
                let n = e.score.normalize();
                n.dot(&(e.fisher * n))
            })
            .fold(f64::INFINITY, f64::min),
    };
    let floor_engaged = !(raw > KAPPA_FLOOR);
    let kappa = if floor_engaged { KAPPA_FLOOR } else { raw };
    Ok(CurvatureEstimate {
        kappa,
        lambda_max: model.lambda_max(),
        r_alpha,
        alpha,
        beta_star: g_c / (kappa * r_alpha),
        density_peak: peak,
        peak_density,
        floor_engaged,
        fisher_min,
        boundary,
    })
}
