//! Exact 2-D projection onto `{u : aᵢᵀu ≥ bᵢ, ‖u‖ ≤ R}` by active-set enumeration.

use crate::Vec2;

const FEAS_TOL: f64 = 1e-9;

/// Half-plane `aᵀu ≥ b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConstraint {
    pub a: Vec2,
    pub b: f64,
}

impl LinearConstraint {
    pub fn slack(&self, u: &Vec2) -> f64 {
        self.a.dot(u) - self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QpOutcome {
    Solved(Vec2),
    Infeasible,
}

fn admissible(u: &Vec2, constraints: &[LinearConstraint], radius: f64) -> bool {
    u.norm() <= radius + FEAS_TOL && constraints.iter().all(|c| c.slack(u) >= -FEAS_TOL)
}

fn line_projection(target: &Vec2, c: &LinearConstraint) -> Option<Vec2> {
    let n2 = c.a.norm_squared();
    (n2 > 0.0).then(|| target + c.a * ((c.b - c.a.dot(target)) / n2))
}

fn line_intersection(c1: &LinearConstraint, c2: &LinearConstraint) -> Option<Vec2> {
    let det = c1.a.x * c2.a.y - c1.a.y * c2.a.x;
    if det.abs() < 1e-14 * c1.a.norm() * c2.a.norm() {
        return None;
    }
    Some(Vec2::new((c1.b * c2.a.y - c2.b * c1.a.y) / det, (c1.a.x * c2.b - c2.a.x * c1.b) / det))
}

fn line_circle(c: &LinearConstraint, radius: f64) -> Vec<Vec2> {
    let n2 = c.a.norm_squared();
    if n2 == 0.0 {
        return Vec::new();
    }
    let foot = c.a * (c.b / n2);
    let d2 = radius * radius - foot.norm_squared();
    if d2 < 0.0 {
        return Vec::new();
    }
    let tangent = Vec2::new(-c.a.y, c.a.x) / n2.sqrt();
    let off = d2.sqrt();
    vec![foot + tangent * off, foot - tangent * off]
}

/// Minimize `‖u - target‖²` over the half-planes and the disk of `radius`.
///
/// The feasible set is convex and the objective strictly convex, so the
/// optimum is the closest admissible point among the KKT candidates with at
/// most two active constraints.
pub fn project(target: Vec2, constraints: &[LinearConstraint], radius: f64) -> QpOutcome {
    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |u: Vec2| {
        if admissible(&u, constraints, radius) {
            let d = (u - target).norm_squared();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, u));
            }
        }
    };
    consider(target);
    if target.norm() > 0.0 {
        consider(target * (radius / target.norm()));
    }
    for (i, c) in constraints.iter().enumerate() {
        if let Some(u) = line_projection(&target, c) {
            consider(u);
        }
        for u in line_circle(c, radius) {
            consider(u);
        }
        for c2 in &constraints[i + 1..] {
            if let Some(u) = line_intersection(c, c2) {
                consider(u);
            }
        }
    }
    match best {
        Some((_, u)) => QpOutcome::Solved(u),
        None => QpOutcome::Infeasible,
    }
}

/// Largest `s ∈ [0, 1]` with `s · u_nom` satisfying every half-plane, or `None`.
pub fn max_feasible_scale(u_nom: &Vec2, constraints: &[LinearConstraint]) -> Option<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for c in constraints {
        let k = c.a.dot(u_nom);
        if k > 0.0 {
            lo = lo.max(c.b / k);
        } else if k < 0.0 {
            hi = hi.min(c.b / k);
        } else if c.b > FEAS_TOL {
            return None;
        }
    }
    (lo <= hi + FEAS_TOL).then_some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn solved(o: QpOutcome) -> Vec2 {
        match o {
            QpOutcome::Solved(u) => u,
            QpOutcome::Infeasible => panic!("infeasible"),
        }
    }

    #[test]
    fn unconstrained_inside_disk() {
        assert_eq!(solved(project(Vec2::new(0.3, 0.2), &[], 1.0)), Vec2::new(0.3, 0.2));
    }

    #[test]
    fn disk_projection() {
        assert_relative_eq!(solved(project(Vec2::new(3.0, 4.0), &[], 1.0)), Vec2::new(0.6, 0.8), epsilon = 1e-15);
    }

    #[test]
    fn single_half_plane() {
        let c = LinearConstraint { a: Vec2::new(-1.0, 0.0), b: -0.2 };
        assert_relative_eq!(solved(project(Vec2::new(0.5, 0.1), &[c], 1.0)), Vec2::new(0.2, 0.1), epsilon = 1e-15);
    }

    #[test]
    fn corner_of_two_half_planes() {
        let cs = [
            LinearConstraint { a: Vec2::new(-1.0, 0.0), b: -0.1 },
            LinearConstraint { a: Vec2::new(0.0, -1.0), b: -0.2 },
        ];
        assert_relative_eq!(solved(project(Vec2::new(0.5, 0.5), &cs, 1.0)), Vec2::new(0.1, 0.2), epsilon = 1e-15);
    }

    #[test]
    fn line_and_circle() {
        // x ≤ 0.6 with target far along x: optimum on the circle at x = 0.6.
        let c = LinearConstraint { a: Vec2::new(-1.0, 0.0), b: -0.6 };
        let u = solved(project(Vec2::new(5.0, 1.0), &[c], 1.0));
        assert_relative_eq!(u, Vec2::new(0.6, 0.8), epsilon = 1e-12);
    }

    #[test]
    fn infeasible_and_scale_fallback() {
        let cs = [LinearConstraint { a: Vec2::new(1.0, 0.0), b: 2.0 }];
        assert_eq!(project(Vec2::zeros(), &cs, 1.0), QpOutcome::Infeasible);
        let cs = [LinearConstraint { a: Vec2::new(-1.0, 0.0), b: -0.25 }];
        assert_relative_eq!(max_feasible_scale(&Vec2::new(1.0, 0.0), &cs).unwrap(), 0.25);
        let cs = [LinearConstraint { a: Vec2::new(1.0, 0.0), b: 0.5 }];
        assert_eq!(max_feasible_scale(&Vec2::new(-1.0, 0.0), &cs), None);
    }

    #[test]
    fn matches_dense_grid() {
        let cs = [
            LinearConstraint { a: Vec2::new(0.3, 1.0), b: 0.1 },
            LinearConstraint { a: Vec2::new(-1.0, 0.4), b: -0.5 },
        ];
        let target = Vec2::new(-0.4, -0.6);
        let u = solved(project(target, &cs, 1.0));
        let mut best = (f64::INFINITY, Vec2::zeros());
        let n = 1000;
        for i in 0..=n {
            for j in 0..=n {
                let v = Vec2::new(-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
                if admissible(&v, &cs, 1.0) && (v - target).norm_squared() < best.0 {
                    best = ((v - target).norm_squared(), v);
                }
            }
        }
        assert!((u - best.1).norm() < 1e-2);
        assert!((u - target).norm_squared() <= best.0 + 1e-12);
    }
}
