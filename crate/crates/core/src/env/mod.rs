//! 2D dynamic-obstacle navigation benchmark.
//!
//! A single-integrator robot `q ← q + u` moves in `[0,10]²` among circular
//! obstacles following Lissajous curves. The feasibility manifold of a step is
//! the set of actions `‖u‖ ≤ u_max` whose next position stays inside the
//! workspace and at least `r_k + d_safe` away from every obstacle at `t+1`.
//!
//! [`EnvState`] is an immutable value: [`EnvState::step`],
//! [`EnvState::reshuffle`] and [`EnvState::set_mode`] return new states.

mod context;
mod modes;
mod obstacle;
mod oracle;

pub use context::{render_context, Context, ContextObservation, Projection, CONTEXT_DIM, RASTER_CHANNELS, RASTER_SIZE};
pub use modes::{Mode, ModeLayouts};
pub use obstacle::{obstacle_position, Bounds, ObstacleDistribution, ObstacleSpec};
pub use oracle::{clearance, is_feasible, sample_feasible, EnvError, MAX_ATTEMPTS_PER_SAMPLE};

use rand::Rng as _;

use crate::rng::{self, Rng, Stream};
use crate::Vec2;

const GOAL_STREAM: u64 = 0x6f61_6c73;

/// Static configuration of an episode's environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub n_obstacles: usize,
    pub u_max: f64,
    pub d_safe: f64,
    pub goal_radius: f64,
    /// New goals are drawn uniformly from this square.
    pub goal_range: (f64, f64),
    pub obstacles: ObstacleDistribution,
    /// Robot at (1,1) with first goal (9,9) instead of a seeded placement.
    pub canonical_start: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_obstacles: 5,
            u_max: 1.0,
            d_safe: 0.3,
            goal_radius: 0.5,
            goal_range: (1.0, 9.0),
            obstacles: ObstacleDistribution::default(),
            canonical_start: true,
        }
    }
}

/// Ground-truth environment state.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub t: u64,
    pub q: Vec2,
    pub goal: Vec2,
    pub obstacles: Vec<ObstacleSpec>,
    pub u_max: f64,
    pub d_safe: f64,
    pub bounds: Bounds,
    pub goal_radius: f64,
    pub goal_range: (f64, f64),
    pub distribution: ObstacleDistribution,
    goal_seed: u64,
    goal_index: u64,
}

impl EnvState {
    /// Initial state of an episode with the given seed.
    pub fn new(config: &EnvConfig, seed: u64) -> Self {
        let mut setup = rng::stream(seed, Stream::Setup);
        let obstacles = config.obstacles.draw_many(&mut setup, config.n_obstacles);
        let bounds = Bounds::default();
        let mut state = Self {
            t: 0,
            q: Vec2::new(1.0, 1.0),
            goal: Vec2::new(9.0, 9.0),
            obstacles,
            u_max: config.u_max,
            d_safe: config.d_safe,
            bounds,
            goal_radius: config.goal_radius,
            goal_range: config.goal_range,
            distribution: config.obstacles.clone(),
            goal_seed: seed,
            goal_index: 0,
        };
        if !config.canonical_start {
            state.q = state.random_free_position(&mut setup);
            let (lo, hi) = config.goal_range;
            loop {
                let g = Vec2::new(setup.random_range(lo..hi), setup.random_range(lo..hi));
                if (g - state.q).norm() >= 3.0 {
                    state.goal = g;
                    break;
                }
            }
        }
        state
    }

    /// Robot start position clear of every inflated obstacle at `t = 0`.
    fn random_free_position(&self, rng: &mut Rng) -> Vec2 {
        let mut candidate = Vec2::new(1.0, 1.0);
        for _ in 0..1000 {
            candidate = Vec2::new(rng.random_range(0.5..9.5), rng.random_range(0.5..9.5));
            let clear = self
                .obstacle_positions(0)
                .iter()
                .zip(&self.obstacles)
                .all(|(o, spec)| (candidate - o).norm() >= spec.radius + self.d_safe + 0.2);
            if clear {
                break;
            }
        }
        candidate
    }

    /// Obstacle centres at step `t`.
    pub fn obstacle_positions(&self, t: u64) -> Vec<Vec2> {
        self.obstacles.iter().map(|o| o.position(t as f64, &self.bounds)).collect()
    }

    /// Apply `u` (feasible or not) and advance time by one step.
    ///
    /// The goal is redrawn once the robot is within `goal_radius` of it.
    pub fn step(&self, u: &Vec2) -> EnvState {
        let mut next = self.clone();
        next.q = self.bounds.clamp(self.q + u);
        next.t = self.t + 1;
        if (next.q - next.goal).norm() <= self.goal_radius {
            next.advance_goal();
        }
        next
    }

    fn advance_goal(&mut self) {
        let (lo, hi) = self.goal_range;
        loop {
            self.goal_index += 1;
            let mut draw = rng::indexed(self.goal_seed, GOAL_STREAM, self.goal_index);
            let g = Vec2::new(draw.random_range(lo..hi), draw.random_range(lo..hi));
            if (g - self.q).norm() > self.goal_radius {
                self.goal = g;
                return;
            }
        }
    }

    /// Number of goals reached so far.
    pub fn goals_reached(&self) -> u64 {
        self.goal_index
    }

    /// Redraw every obstacle parameter from the state's distribution.
    /// Robot and goal are unchanged.
    pub fn reshuffle(&self, rng: &mut Rng) -> EnvState {
        let mut next = self.clone();
        next.obstacles = self.distribution.draw_many(rng, self.obstacles.len());
        next
    }

    /// Replace the obstacle set by the layout of `mode`.
    pub fn set_mode(&self, mode: Mode, layouts: &ModeLayouts) -> EnvState {
        let mut next = self.clone();
        next.obstacles = layouts.layout(mode).to_vec();
        next
    }

    /// Tracking cost `‖q + u - goal‖²` of the current step.
    pub fn tracking_cost(&self, u: &Vec2) -> f64 {
        (self.q + u - self.goal).norm_squared()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn empty_state() -> EnvState {
        let config = EnvConfig { n_obstacles: 0, ..EnvConfig::default() };
        EnvState::new(&config, 0)
    }

    #[test]
    fn step_adds_action() {
        let mut s = empty_state();
        s.q = Vec2::new(5.0, 5.0);
        s.goal = Vec2::new(9.0, 9.0);
        let n = s.step(&Vec2::new(0.3, 0.4));
        assert_relative_eq!(n.q, Vec2::new(5.3, 5.4), epsilon = 1e-15);
        assert_eq!(n.t, 1);
    }

    #[test]
    fn step_clamps_to_workspace() {
        let mut s = empty_state();
        s.q = Vec2::new(9.9, 5.0);
        let n = s.step(&Vec2::new(0.5, 0.0));
        assert_eq!(n.q, Vec2::new(10.0, 5.0));
    }

    #[test]
    fn arrival_resamples_goal() {
        let mut s = empty_state();
        s.q = Vec2::new(8.5, 9.0);
        let n = s.step(&Vec2::new(0.3, 0.0));
        assert!((n.q - s.goal).norm() <= s.goal_radius);
        assert_ne!(n.goal, s.goal);
        assert!((n.goal - n.q).norm() > n.goal_radius);
        assert_eq!(n.goals_reached(), 1);
    }

    #[test]
    fn goal_sequence_is_seeded() {
        let mut a = empty_state();
        a.q = Vec2::new(8.8, 8.8);
        let b = a.clone();
        assert_eq!(a.step(&Vec2::new(0.1, 0.1)).goal, b.step(&Vec2::new(0.2, 0.2)).goal);
        a.goal_seed = 99;
        assert_ne!(a.step(&Vec2::new(0.1, 0.1)).goal, b.step(&Vec2::new(0.1, 0.1)).goal);
    }

    #[test]
    fn canonical_and_random_starts() {
        let canonical = EnvState::new(&EnvConfig::default(), 3);
        assert_eq!(canonical.q, Vec2::new(1.0, 1.0));
        assert_eq!(canonical.goal, Vec2::new(9.0, 9.0));
        let config = EnvConfig { canonical_start: false, ..EnvConfig::default() };
        let a = EnvState::new(&config, 3);
        let b = EnvState::new(&config, 4);
        assert_eq!(a, EnvState::new(&config, 3));
        assert_ne!(a.q, b.q);
        assert!(a.bounds.contains(&a.q));
    }

    #[test]
    fn reshuffle_is_deterministic_and_keeps_robot() {
        let s = EnvState::new(&EnvConfig::default(), 1);
        let a = s.reshuffle(&mut rng::stream(5, Stream::Reshuffle));
        let b = s.reshuffle(&mut rng::stream(5, Stream::Reshuffle));
        assert_eq!(a, b);
        assert_ne!(a.obstacles, s.obstacles);
        assert_eq!(a.q, s.q);
        assert_eq!(a.goal, s.goal);
        for o in &a.obstacles {
            assert!((0.4..=0.8).contains(&o.radius));
            let p = o.position(a.t as f64, &a.bounds);
            assert!(a.bounds.contains(&p));
        }
    }

    #[test]
    fn reshuffle_with_collapsed_amplitudes_is_static() {
        let mut s = EnvState::new(&EnvConfig::default(), 1);
        s.distribution.amplitude = (0.0, 0.0);
        let r = s.reshuffle(&mut rng::stream(2, Stream::Reshuffle));
        for o in &r.obstacles {
            assert!(o.is_static());
            assert_eq!(o.position(0.0, &r.bounds), o.position(250.0, &r.bounds));
        }
        assert_ne!(r.obstacles[0].center_base, s.obstacles[0].center_base);
    }
}
