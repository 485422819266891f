//! Top-down raster observation and its random-projection embedding.
//!
//! Raster layout: row-major over `(row, col, channel)`, channel-last, with
//! cell `(0, 0)` at workspace corner `(0, 0)`; `row` indexes `y` and `col`
//! indexes `x`. Channels: 0 obstacle occupancy, 1 robot, 2 goal.

use rand_distr::{Distribution, Normal};

use super::EnvState;
use crate::rng::Rng;
use crate::Vec2;

pub const RASTER_SIZE: usize = 16;
pub const RASTER_CHANNELS: usize = 3;
pub const RASTER_LEN: usize = RASTER_SIZE * RASTER_SIZE * RASTER_CHANNELS;
pub const CONTEXT_DIM: usize = 12;

/// Context embedding `ξ`.
pub type Context = [f64; CONTEXT_DIM];

/// Fixed `CONTEXT_DIM × RASTER_LEN` projection, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    weights: Vec<f64>,
}

impl Projection {
    /// Standard deviation of the Gaussian projection entries. About a dozen
    /// cells are active in a typical raster, giving pre-activations of
    /// order one.
    pub const ENTRY_STD: f64 = 0.25;

    pub fn from_rng(rng: &mut Rng) -> Self {
        let normal = Normal::new(0.0, Self::ENTRY_STD).expect("valid std");
        let weights = (0..CONTEXT_DIM * RASTER_LEN).map(|_| normal.sample(rng)).collect();
        Self { weights }
    }

    pub fn from_weights(weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), CONTEXT_DIM * RASTER_LEN);
        Self { weights }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * RASTER_LEN..(i + 1) * RASTER_LEN]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextObservation {
    pub raster: Vec<f64>,
    pub embedding: Context,
}

impl ContextObservation {
    pub fn cell(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.raster[raster_index(row, col, channel)]
    }
}

pub fn raster_index(row: usize, col: usize, channel: usize) -> usize {
    (row * RASTER_SIZE + col) * RASTER_CHANNELS + channel
}

fn cell_of(p: &Vec2, cell: f64) -> (usize, usize) {
    let clamp = |v: f64| ((v / cell).floor().max(0.0) as usize).min(RASTER_SIZE - 1);
    (clamp(p.y), clamp(p.x))
}

/// Rasterize `state` at its current time and embed it with `tanh(R · vec(raster))`.
pub fn render_context(state: &EnvState, projection: &Projection) -> ContextObservation {
    let extent = state.bounds.max - state.bounds.min;
    let cell = extent.x / RASTER_SIZE as f64;
    let mut raster = vec![0.0; RASTER_LEN];
    let positions = state.obstacle_positions(state.t);
    for row in 0..RASTER_SIZE {
        for col in 0..RASTER_SIZE {
            let center = state.bounds.min + Vec2::new((col as f64 + 0.5) * cell, (row as f64 + 0.5) * cell);
            let occupied = positions.iter().zip(&state.obstacles).any(|(o, spec)| (center - o).norm() <= spec.radius);
            if occupied {
                raster[raster_index(row, col, 0)] = 1.0;
            }
        }
    }
    let (r, c) = cell_of(&(state.q - state.bounds.min), cell);
    raster[raster_index(r, c, 1)] = 1.0;
    let (r, c) = cell_of(&(state.goal - state.bounds.min), cell);
    raster[raster_index(r, c, 2)] = 1.0;

    let mut embedding = [0.0; CONTEXT_DIM];
    for (i, e) in embedding.iter_mut().enumerate() {
        let pre: f64 = projection.row(i).iter().zip(&raster).filter(|(_, &x)| x != 0.0).map(|(w, x)| w * x).sum();
        *e = pre.tanh();
    }
    ContextObservation { raster, embedding }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, Mode, ModeLayouts, ObstacleDistribution};
    use crate::rng::{self, Stream};

    fn projection() -> Projection {
        Projection::from_rng(&mut rng::stream(3, Stream::Projection))
    }

    fn empty_state() -> EnvState {
        EnvState::new(&EnvConfig { n_obstacles: 0, ..EnvConfig::default() }, 0)
    }

    #[test]
    fn no_obstacles_leaves_occupancy_empty() {
        let obs = render_context(&empty_state(), &projection());
        let occupied = (0..RASTER_SIZE * RASTER_SIZE).filter(|i| obs.raster[i * 3] != 0.0).count();
        assert_eq!(occupied, 0);
    }

    #[test]
    fn robot_rasterizes_to_one_cell() {
        let mut s = empty_state();
        s.q = Vec2::new(5.0, 5.0);
        let obs = render_context(&s, &projection());
        let robot: Vec<usize> = (0..RASTER_SIZE * RASTER_SIZE).filter(|i| obs.raster[i * 3 + 1] != 0.0).collect();
        assert_eq!(robot, vec![8 * RASTER_SIZE + 8]);
        assert_eq!(obs.cell(8, 8, 1), 1.0);
    }

    #[test]
    fn robot_translation_moves_cell_by_one() {
        let p = projection();
        let mut s = empty_state();
        s.q = Vec2::new(3.1, 4.2);
        let a = render_context(&s, &p);
        s.q.x += 10.0 / RASTER_SIZE as f64;
        let b = render_context(&s, &p);
        let idx = |o: &ContextObservation| (0..RASTER_SIZE * RASTER_SIZE).find(|i| o.raster[i * 3 + 1] != 0.0).unwrap();
        assert_eq!(idx(&b), idx(&a) + 1);
    }

    #[test]
    fn embedding_is_strictly_inside_unit_interval() {
        let s = EnvState::new(&EnvConfig::default(), 2);
        let obs = render_context(&s, &projection());
        assert!(obs.embedding.iter().all(|e| e.abs() < 1.0));
    }

    #[test]
    fn quadrant_modes_give_distinct_embeddings() {
        let p = projection();
        let layouts = ModeLayouts::generate(&mut rng::stream(1, Stream::Modes), &ObstacleDistribution::default());
        let s = EnvState::new(&EnvConfig::default(), 0);
        let sw = render_context(&s.set_mode(Mode::SouthWest, &layouts), &p).embedding;
        let ne = render_context(&s.set_mode(Mode::NorthEast, &layouts), &p).embedding;
        let dist: f64 = sw.iter().zip(&ne).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(dist > 0.1, "embedding distance {dist}");
    }
}
