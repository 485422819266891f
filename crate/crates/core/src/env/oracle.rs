//! Black-box feasibility oracle and its rejection sampler.

use std::f64::consts::TAU;

use rand::Rng as _;
use thiserror::Error;

use super::EnvState;
use crate::rng::Rng;
use crate::Vec2;

/// Proposal budget per requested sample. Below an acceptance rate of
/// `1 / MAX_ATTEMPTS_PER_SAMPLE` the feasible region is declared blocked.
pub const MAX_ATTEMPTS_PER_SAMPLE: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("feasible region too small: {accepted} of {requested} samples accepted after {attempts} proposals")]
    FeasibleRegionTooSmall { requested: usize, accepted: usize, attempts: usize },
}

/// Signed obstacle clearance of the next position: `min_k ‖q+u-o_k(t+1)‖ - r_k - d_safe`.
/// `+∞` without obstacles.
pub fn clearance(state: &EnvState, u: &Vec2) -> f64 {
    let next = state.q + u;
    let t_next = (state.t + 1) as f64;
    state
        .obstacles
        .iter()
        .map(|o| (next - o.position(t_next, &state.bounds)).norm() - o.radius - state.d_safe)
        .fold(f64::INFINITY, f64::min)
}

/// Membership test for the feasibility manifold of the current step.
pub fn is_feasible(state: &EnvState, u: &Vec2) -> bool {
    if u.norm() > state.u_max {
        return false;
    }
    if !state.bounds.contains(&(state.q + u)) {
        return false;
    }
    let next = state.q + u;
    let t_next = (state.t + 1) as f64;
    state.obstacles.iter().all(|o| {
        let min_dist = o.radius + state.d_safe;
        (next - o.position(t_next, &state.bounds)).norm_squared() >= min_dist * min_dist
    })
}

/// Draw `n` i.i.d. actions uniform on the feasible part of the `u_max` disk.
pub fn sample_feasible(state: &EnvState, n: usize, rng: &mut Rng) -> Result<Vec<Vec2>, EnvError> {
    let budget = n * MAX_ATTEMPTS_PER_SAMPLE;
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        if attempts >= budget {
            return Err(EnvError::FeasibleRegionTooSmall { requested: n, accepted: out.len(), attempts });
        }
        attempts += 1;
        let radius = state.u_max * rng.random::<f64>().sqrt();
        let angle = TAU * rng.random::<f64>();
        let u = Vec2::new(radius * angle.cos(), radius * angle.sin());
        if is_feasible(state, &u) {
            out.push(u);
        }
    }
    Ok(out)
}
