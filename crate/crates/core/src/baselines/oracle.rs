use crate::controller::{Controller, Decision, Observation};
use crate::env::EnvState;
use crate::rng::Rng;
use crate::Vec2;

/// Cells per axis of the oracle grid over `[-u_max, u_max]²`.
pub const ORACLE_GRID: usize = 201;

/// Grid minimizer of the tracking cost over the feasible part of the action
/// disk, or `None` when no cell is feasible.
///
/// Ties are broken by smaller `‖u‖`, then by `x`, then by `y`.
pub fn oracle_action(state: &EnvState) -> Option<Vec2> {
    oracle_action_on(state, ORACLE_GRID)
}

/// [`oracle_action`] on an `n × n` grid.
pub fn oracle_action_on(state: &EnvState, n: usize) -> Option<Vec2> {
    assert!(n >= 2);
    let t_next = (state.t + 1) as f64;
    let obstacles: Vec<(Vec2, f64)> = state
        .obstacles
        .iter()
        .map(|o| (o.position(t_next, &state.bounds), (o.radius + state.d_safe).powi(2)))
        .collect();
    let cell = 2.0 * state.u_max / (n - 1) as f64;
    let mut best: Option<(f64, f64, Vec2)> = None;
    for i in 0..n {
        let x = -state.u_max + i as f64 * cell;
        for j in 0..n {
            let u = Vec2::new(x, -state.u_max + j as f64 * cell);
            let norm = u.norm();
            if norm > state.u_max {
                continue;
            }
            let next = state.q + u;
            if !state.bounds.contains(&next) || obstacles.iter().any(|(o, r2)| (next - o).norm_squared() < *r2) {
                continue;
            }
            let cost = (next - state.goal).norm_squared();
            // Cells are visited in lexicographic order, so strict comparisons
            // keep the first of any exact tie.
            let better = match best {
                None => true,
                Some((bc, bn, _)) => cost < bc || (cost == bc && norm < bn),
            };
            if better {
                best = Some((cost, norm, u));
            }
        }
    }
    best.map(|(_, _, u)| u)
}

/// Single-step cost-optimal controller with full knowledge of the next
/// feasibility manifold; the normalizer of the cost metric.
#[derive(Debug, Clone, Default)]
pub struct OracleController;

impl Controller for OracleController {
    fn name(&self) -> &str {
        "oracle"
    }

    fn act(&mut self, obs: &Observation<'_>, _rng: &mut Rng) -> Decision {
        match oracle_action(obs.state) {
            Some(u) => Decision::plain(u),
            None => {
                let mut d = Decision::plain(Vec2::zeros());
                d.diagnostics.fallback = true;
                d.diagnostics.blocked = true;
                d
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{is_feasible, EnvConfig, ObstacleSpec};
    use approx::assert_relative_eq;

    fn open_state(q: Vec2, goal: Vec2) -> EnvState {
        let mut s = EnvState::new(&EnvConfig { n_obstacles: 0, ..EnvConfig::default() }, 0);
        s.q = q;
        s.goal = goal;
        s
    }

    #[test]
    fn near_goal_picks_nearest_cell() {
        let s = open_state(Vec2::new(5.0, 5.0), Vec2::new(5.303, 4.897));
        assert_relative_eq!(oracle_action(&s).unwrap(), Vec2::new(0.30, -0.10), epsilon = 1e-12);
    }

    #[test]
    fn far_goal_hits_disk_toward_goal() {
        let s = open_state(Vec2::new(5.0, 5.0), Vec2::new(9.0, 5.0));
        assert_relative_eq!(oracle_action(&s).unwrap(), Vec2::new(1.0, 0.0), epsilon = 1e-12);
        let s = open_state(Vec2::new(5.0, 5.0), Vec2::new(9.0, 9.0));
        let u = oracle_action(&s).unwrap();
        assert!(u.norm() <= 1.0);
        assert!((u.normalize() - Vec2::new(1.0, 1.0).normalize()).norm() < 0.02);
    }

    fn blocked_state() -> EnvState {
        let mut s = open_state(Vec2::new(5.0, 5.0), Vec2::new(9.0, 5.0));
        s.obstacles = vec![ObstacleSpec {
            center_base: Vec2::new(5.9, 5.0),
            radius: 0.3,
            amp_x: 0.0,
            amp_y: 0.0,
            freq_x: 0.0,
            freq_y: 0.0,
            phase_x: 0.0,
            phase_y: 0.0,
        }];
        s
    }

    #[test]
    fn blocking_obstacle_moves_off_axis() {
        let s = blocked_state();
        let u = oracle_action(&s).unwrap();
        assert!(is_feasible(&s, &u));
        assert!(u.y.abs() > 0.1);
        // Exhaustive check over the same grid.
        let n = ORACLE_GRID;
        let cell = 2.0 / (n - 1) as f64;
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let v = Vec2::new(-1.0 + i as f64 * cell, -1.0 + j as f64 * cell);
                if is_feasible(&s, &v) {
                    best = best.min(s.tracking_cost(&v));
                }
            }
        }
        assert_eq!(s.tracking_cost(&u), best);
    }

    #[test]
    fn refinement_is_consistent() {
        let s = blocked_state();
        let coarse = oracle_action_on(&s, 201).unwrap();
        let fine = oracle_action_on(&s, 401).unwrap();
        assert!(s.tracking_cost(&fine) <= s.tracking_cost(&coarse) + 1e-12);
        assert!(s.tracking_cost(&coarse) - s.tracking_cost(&fine) < 2.0 * 0.01 * 2.0 * 4.0);
    }

    #[test]
    fn fully_blocked_has_no_cell() {
        let mut s = blocked_state();
        s.obstacles[0].center_base = s.q;
        s.obstacles[0].radius = 2.0;
        assert_eq!(oracle_action(&s), None);
    }
}
