use std::f64::consts::TAU;

use rand::Rng as _;

use crate::rng::Rng;
use crate::Vec2;

/// Axis-aligned workspace box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn square(lo: f64, hi: f64) -> Self {
        Self { min: Vec2::new(lo, lo), max: Vec2::new(hi, hi) }
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Clamp the centre of a disk of `radius` so the whole disk stays inside.
    pub fn clamp_disk(&self, p: Vec2, radius: f64) -> Vec2 {
        let lo = self.min.add_scalar(radius);
        let hi = self.max.add_scalar(-radius);
        Vec2::new(p.x.clamp(lo.x, hi.x.max(lo.x)), p.y.clamp(lo.y, hi.y.max(lo.y)))
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self::square(0.0, 10.0)
    }
}

/// Circular obstacle whose centre follows a Lissajous curve
/// `c + (A sin(ωt + φ), B cos(νt + ψ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSpec {
    pub center_base: Vec2,
    pub radius: f64,
    pub amp_x: f64,
    pub amp_y: f64,
    /// rad/step
    pub freq_x: f64,
    pub freq_y: f64,
    pub phase_x: f64,
    pub phase_y: f64,
}

impl ObstacleSpec {
    /// Unclamped Lissajous position at step `t`.
    pub fn raw_position(&self, t: f64) -> Vec2 {
        self.center_base
            + Vec2::new(
                self.amp_x * (self.freq_x * t + self.phase_x).sin(),
                self.amp_y * (self.freq_y * t + self.phase_y).cos(),
            )
    }

    /// Position at step `t`, clamped so the disk stays inside `bounds`.
    pub fn position(&self, t: f64, bounds: &Bounds) -> Vec2 {
        bounds.clamp_disk(self.raw_position(t), self.radius)
    }

    pub fn is_static(&self) -> bool {
        self.amp_x == 0.0 && self.amp_y == 0.0
    }
}

/// Free-function form of [`ObstacleSpec::position`].
pub fn obstacle_position(spec: &ObstacleSpec, t: u64, bounds: &Bounds) -> Vec2 {
    spec.position(t as f64, bounds)
}

/// Sampling ranges for obstacle parameters. Every range is `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleDistribution {
    pub base: (f64, f64),
    pub radius: (f64, f64),
    pub amplitude: (f64, f64),
    pub frequency: (f64, f64),
    /// Multiplies every drawn frequency.
    pub speed_multiplier: f64,
}

impl Default for ObstacleDistribution {
    fn default() -> Self {
        Self {
            base: (2.0, 8.0),
            radius: (0.4, 0.8),
            amplitude: (0.5, 2.0),
            frequency: (0.02, 0.08),
            speed_multiplier: 1.0,
        }
    }
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

impl ObstacleDistribution {
    /// Draw one obstacle with its base inside `base_x × base_y`.
    pub fn draw_in(&self, rng: &mut Rng, base_x: (f64, f64), base_y: (f64, f64)) -> ObstacleSpec {
        let center_base = Vec2::new(uniform(rng, base_x), uniform(rng, base_y));
        let radius = uniform(rng, self.radius);
        let amp_x = uniform(rng, self.amplitude);
        let amp_y = uniform(rng, self.amplitude);
        let freq_x = uniform(rng, self.frequency) * self.speed_multiplier;
        let freq_y = uniform(rng, self.frequency) * self.speed_multiplier;
        let phase_x = uniform(rng, (0.0, TAU));
        let phase_y = uniform(rng, (0.0, TAU));
        ObstacleSpec { center_base, radius, amp_x, amp_y, freq_x, freq_y, phase_x, phase_y }
    }

    pub fn draw(&self, rng: &mut Rng) -> ObstacleSpec {
        self.draw_in(rng, self.base, self.base)
    }

    pub fn draw_many(&self, rng: &mut Rng, n: usize) -> Vec<ObstacleSpec> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}
