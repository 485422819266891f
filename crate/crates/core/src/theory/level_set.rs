use super::scene::boundary;
use super::{CheckError, CheckReport, GridSpec, SyntheticScene};
use crate::Vec2;

/// Directed grid Hausdorff distance `sup_{a ∈ from} dist(a, to)`.
///
/// For nodes outside `to` the nearest node of `to` lies on its boundary, so
/// only boundary nodes are searched.
fn directed(grid: &GridSpec, from: &[bool], to: &[bool]) -> f64 {
    let to_members: Vec<usize> = (0..grid.len()).filter(|&k| to[k]).collect();
    let edge: Vec<Vec2> = boundary(grid, to, &to_members).into_iter().map(|k| grid.point_at(k)).collect();
    (0..grid.len())
        .filter(|&k| from[k] && !to[k])
        .map(|k| {
            let u = grid.point_at(k);
            edge.iter().map(|b| (b - u).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between the `α`-superlevel sets of a reference
/// density and an estimate against `(α + gap)/c_∂ + 2·cell`.
///
/// `gap` is the sup-norm density difference on the grid; the smallness
/// condition requires `gap < α`. `c_∂` is the smallest reference-density
/// gradient norm (the inward-normal derivative) over a tube made of the
/// reference boundary nodes and every node whose density lies within `gap`
/// of `α`. A bound exceeding the grid diagonal is flagged `vacuous`.
pub fn check_level_set_stability(
    truth: &SyntheticScene,
    estimate: &SyntheticScene,
    alpha: f64,
) -> Result<CheckReport, CheckError> {
    if truth.grid != estimate.grid {
        return Err(CheckError::SceneMismatch("grid".into()));
    }
    let grid = &truth.grid;
    let ft = truth.density_field();
    let fe = estimate.density_field();
    let gap = ft.iter().zip(&fe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(gap < alpha) {
        return Err(CheckError::SmallnessViolated { gap, alpha });
    }
    let a: Vec<bool> = ft.iter().map(|&d| d >= alpha).collect();
    let b: Vec<bool> = fe.iter().map(|&d| d >= alpha).collect();
    if !a.iter().any(|&x| x) {
        return Err(CheckError::InvalidScene("empty reference superlevel set".into()));
    }
    let hausdorff = directed(grid, &a, &b).max(directed(grid, &b, &a));

    let a_members: Vec<usize> = (0..grid.len()).filter(|&k| a[k]).collect();
    let mut tube = boundary(grid, &a, &a_members);
    tube.extend((0..grid.len()).filter(|&k| (ft[k] - alpha).abs() <= gap));
    let c_boundary =
        tube.iter().map(|&k| truth.density_gradient(&grid.point_at(k)).norm()).fold(f64::INFINITY, f64::min);
    let bound = (alpha + gap) / c_boundary + 2.0 * grid.cell();
    let mut report = CheckReport::new("level_set_stability", hausdorff - bound, 0.0, tube.len())
        .param("hausdorff", hausdorff)
        .param("bound", bound)
        .param("sup_gap", gap)
        .param("c_boundary", c_boundary);
    if !(bound < (grid.max - grid.min).norm()) {
        report = report.flag("vacuous");
    }
    Ok(report)
}
