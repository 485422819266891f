use std::collections::VecDeque;

use crate::env::Context;
use crate::Vec2;

/// One oracle sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    pub action: Vec2,
    /// Robot position when the action was drawn.
    pub origin: Vec2,
    pub context: Option<Context>,
    pub step: u64,
}

/// Sliding window of oracle samples, oldest first.
///
/// Samples are kept as feasible *next positions* `origin + action`, so they
/// can be re-expressed as actions from wherever the robot is now.
#[derive(Debug, Clone)]
pub struct SampleBuffer {
    entries: VecDeque<BufferEntry>,
    window_steps: u64,
    per_step_cap: usize,
}

impl SampleBuffer {
    pub fn new(window_steps: u64, per_step_cap: usize) -> Self {
        assert!(window_steps >= 1, "window must cover at least the current step");
        Self { entries: VecDeque::new(), window_steps, per_step_cap }
    }

    /// Append the samples of `step` (at most `per_step_cap`) and evict every
    /// entry older than the window.
    pub fn push_step(&mut self, step: u64, origin: Vec2, actions: &[Vec2], context: Option<Context>) {
        debug_assert!(self.entries.back().is_none_or(|e| e.step <= step));
        for a in actions.iter().take(self.per_step_cap) {
            self.entries.push_back(BufferEntry { action: *a, origin, context, step });
        }
        self.evict(step);
    }

    fn evict(&mut self, current: u64) {
        while let Some(front) = self.entries.front() {
            if front.step + self.window_steps <= current {
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn window_steps(&self) -> u64 {
        self.window_steps
    }

    pub fn per_step_cap(&self) -> usize {
        self.per_step_cap
    }

    pub fn entries(&self) -> impl Iterator<Item = &BufferEntry> {
        self.entries.iter()
    }

    /// Stored samples re-expressed as actions from `origin`, dropping those
    /// that would need more than `u_max`. Returns the actions together with
    /// the indices of the entries they came from.
    pub fn actions_from(&self, origin: Vec2, u_max: f64) -> (Vec<Vec2>, Vec<usize>) {
        let mut actions = Vec::with_capacity(self.entries.len());
        let mut index = Vec::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let a = e.origin + e.action - origin;
            if a.norm() <= u_max {
                actions.push(a);
                index.push(i);
            }
        }
        (actions, index)
    }

    pub fn get(&self, i: usize) -> Option<&BufferEntry> {
        self.entries.get(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn actions(n: usize) -> Vec<Vec2> {
        (0..n).map(|i| Vec2::new(i as f64 * 0.01, 0.0)).collect()
    }

    #[test]
    fn window_evicts_old_steps() {
        let mut b = SampleBuffer::new(3, 10);
        for t in 0..6 {
            b.push_step(t, Vec2::zeros(), &actions(4), None);
        }
        assert_eq!(b.len(), 12);
        assert!(b.entries().all(|e| e.step >= 3));
        let steps: Vec<u64> = b.entries().map(|e| e.step).collect();
        assert!(steps.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn per_step_cap_bounds_length() {
        let mut b = SampleBuffer::new(2, 5);
        for t in 0..10 {
            b.push_step(t, Vec2::zeros(), &actions(20), None);
            assert!(b.len() <= 10);
        }
    }

    #[test]
    fn re_anchoring_shifts_and_drops() {
        let mut b = SampleBuffer::new(5, 10);
        b.push_step(0, Vec2::new(1.0, 1.0), &[Vec2::new(0.5, 0.0), Vec2::new(-0.9, 0.0)], None);
        let (a, idx) = b.actions_from(Vec2::new(1.5, 1.0), 1.0);
        assert_eq!(a, vec![Vec2::zeros()]);
        assert_eq!(idx, vec![0]);
    }
}
