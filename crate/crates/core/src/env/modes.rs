//! Quadrant-clustered obstacle layouts for the contextual benchmark.

use super::{ObstacleDistribution, ObstacleSpec};
use crate::rng::Rng;

/// Quadrant in which a layout's obstacles are concentrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    SouthWest = 0,
    SouthEast = 1,
    NorthWest = 2,
    NorthEast = 3,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::SouthWest, Mode::SouthEast, Mode::NorthWest, Mode::NorthEast];

    pub fn from_index(index: usize) -> Option<Mode> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn ranges(self) -> ((f64, f64), (f64, f64)) {
        const LOW: (f64, f64) = (1.2, 3.8);
        const HIGH: (f64, f64) = (6.2, 8.8);
        match self {
            Mode::SouthWest => (LOW, LOW),
            Mode::SouthEast => (HIGH, LOW),
            Mode::NorthWest => (LOW, HIGH),
            Mode::NorthEast => (HIGH, HIGH),
        }
    }
}

/// One pre-generated layout per mode, reused every time the mode recurs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLayouts {
    layouts: [Vec<ObstacleSpec>; 4],
}

impl ModeLayouts {
    pub const OBSTACLES_PER_MODE: usize = 4;

    /// Draw the four layouts. Obstacles keep drifting inside their cluster
    /// with amplitudes in `[0.2, 0.6]`.
    pub fn generate(rng: &mut Rng, distribution: &ObstacleDistribution) -> Self {
        let dist = ObstacleDistribution { amplitude: (0.2, 0.6), ..distribution.clone() };
        let layouts = Mode::ALL.map(|mode| {
            let (bx, by) = mode.ranges();
            (0..Self::OBSTACLES_PER_MODE).map(|_| dist.draw_in(rng, bx, by)).collect()
        });
        Self { layouts }
    }

    pub fn layout(&self, mode: Mode) -> &[ObstacleSpec] {
        &self.layouts[mode.index()]
    }
}
