use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use super::cbf::{filter_nominal, nominal_action, workspace_constraints, CBF_GAMMA};
use super::qp::LinearConstraint;
use crate::controller::{Controller, Decision, Observation};
use crate::env::EnvState;
use crate::rng::Rng;
use crate::Vec2;

const LENGTHSCALE_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const VARIANCE_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Gaussian-process surrogate of the barrier value `h` as a function of the
/// robot's next position, with an RBF kernel on standardized targets.
#[derive(Debug, Clone)]
pub struct GpConstraintModel {
    inputs: Vec<Vec2>,
    targets: Vec<f64>,
    pub kernel_lengthscale: f64,
    /// Signal variance in standardized target units.
    pub kernel_variance: f64,
    /// Observation-noise variance in standardized target units.
    pub noise_variance: f64,
    pub refit_period: u64,
    pub max_points: usize,
    seen: u64,
    posterior: Option<Posterior>,
}

#[derive(Debug, Clone)]
struct Posterior {
    alpha: DVector<f64>,
    mean: f64,
    scale: f64,
}

impl Default for GpConstraintModel {
    fn default() -> Self {
        Self::new(1.0, 1.0, 1e-4, 50, 500)
    }
}

fn standardize(targets: &[f64]) -> (f64, f64) {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    (mean, if var > 1e-12 { var.sqrt() } else { 1.0 })
}

impl GpConstraintModel {
    pub fn new(lengthscale: f64, variance: f64, noise_variance: f64, refit_period: u64, max_points: usize) -> Self {
        assert!(lengthscale > 0.0 && variance > 0.0 && noise_variance > 0.0);
        assert!(refit_period >= 1 && max_points >= 1);
        Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            kernel_lengthscale: lengthscale,
            kernel_variance: variance,
            noise_variance,
            refit_period,
            max_points,
            seen: 0,
            posterior: None,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn kernel(&self, a: &Vec2, b: &Vec2) -> f64 {
        let l2 = self.kernel_lengthscale * self.kernel_lengthscale;
        self.kernel_variance * (-(a - b).norm_squared() / (2.0 * l2)).exp()
    }

    fn gram(&self, lengthscale: f64, variance: f64) -> DMatrix<f64> {
        let n = self.inputs.len();
        let l2 = lengthscale * lengthscale;
        DMatrix::from_fn(n, n, |i, j| {
            let k = variance * (-(self.inputs[i] - self.inputs[j]).norm_squared() / (2.0 * l2)).exp();
            if i == j {
                k + self.noise_variance
            } else {
                k
            }
        })
    }

    /// Add an observation; past `max_points`, reservoir sampling decides
    /// whether it replaces a stored one.
    pub fn observe(&mut self, x: Vec2, h: f64, rng: &mut Rng) {
        self.seen += 1;
        if self.inputs.len() < self.max_points {
            self.inputs.push(x);
            self.targets.push(h);
        } else {
            let j = rng.random_range(0..self.seen) as usize;
            if j < self.max_points {
                self.inputs[j] = x;
                self.targets[j] = h;
            }
        }
        self.posterior = None;
    }

    /// Choose lengthscale and variance on a grid by log marginal likelihood.
    pub fn refit_hyperparameters(&mut self) {
        if self.inputs.len() < 2 {
            return;
        }
        let (mean, scale) = standardize(&self.targets);
        let y = DVector::from_iterator(self.targets.len(), self.targets.iter().map(|t| (t - mean) / scale));
        let mut best = (f64::NEG_INFINITY, self.kernel_lengthscale, self.kernel_variance);
        for &l in &LENGTHSCALE_GRID {
            for &v in &VARIANCE_GRID {
                let Some(chol) = self.gram(l, v).cholesky() else { continue };
                let alpha = chol.solve(&y);
                let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
                let lml = -0.5 * y.dot(&alpha) - 0.5 * log_det;
                if lml > best.0 {
                    best = (lml, l, v);
                }
            }
        }
        self.kernel_lengthscale = best.1;
        self.kernel_variance = best.2;
        self.posterior = None;
    }

    fn posterior(&mut self) -> Option<&Posterior> {
        if self.posterior.is_none() && !self.inputs.is_empty() {
            let (mean, scale) = standardize(&self.targets);
            let y = DVector::from_iterator(self.targets.len(), self.targets.iter().map(|t| (t - mean) / scale));
            let chol = self.gram(self.kernel_lengthscale, self.kernel_variance).cholesky()?;
            self.posterior = Some(Posterior { alpha: chol.solve(&y), mean, scale });
        }
        self.posterior.as_ref()
    }

    /// Posterior mean of `h` at `x` and its input gradient. The prior mean is
    /// the training mean.
    pub fn predict(&mut self, x: &Vec2) -> Option<(f64, Vec2)> {
        self.posterior()?;
        let post = self.posterior.as_ref().expect("computed above");
        let l2 = self.kernel_lengthscale * self.kernel_lengthscale;
        let mut value = 0.0;
        let mut grad = Vec2::zeros();
        for (xi, a) in self.inputs.iter().zip(post.alpha.iter()) {
            let k = self.kernel(x, xi) * a;
            value += k;
            grad += (xi - x) * (k / l2);
        }
        Some((post.mean + post.scale * value, grad * post.scale))
    }
}

/// Realized barrier value `min_k ‖p - o_k(t)‖² - (r_k + d_safe)²` at step `t`.
pub fn barrier_value(state: &EnvState, p: &Vec2, t: u64) -> f64 {
    state
        .obstacles
        .iter()
        .map(|o| (p - o.position(t as f64, &state.bounds)).norm_squared() - (o.radius + state.d_safe).powi(2))
        .fold(f64::INFINITY, f64::min)
}

/// CBF-QP whose single constraint comes from a GP fitted online to the
/// barrier values the robot has experienced.
#[derive(Debug, Clone)]
pub struct GpCbfController {
    pub gamma: f64,
    pub gp: GpConstraintModel,
}

impl Default for GpCbfController {
    fn default() -> Self {
        Self { gamma: CBF_GAMMA, gp: GpConstraintModel::default() }
    }
}

/// One GP-CBF step. Without training data the nominal action passes through.
pub fn gp_cbf_action(state: &EnvState, gp: &mut GpConstraintModel, gamma: f64) -> super::cbf::QpAction {
    let mut constraints: Vec<LinearConstraint> = workspace_constraints(state).to_vec();
    if let Some((h, grad)) = gp.predict(&state.q) {
        constraints.push(LinearConstraint { a: grad, b: -gamma * h });
    }
    filter_nominal(nominal_action(state), &constraints, state.u_max)
}

impl Controller for GpCbfController {
    fn name(&self) -> &str {
        "gp_cbf"
    }

    fn act(&mut self, obs: &Observation<'_>, rng: &mut Rng) -> Decision {
        let s = obs.state;
        // The realized barrier value of the previous action is observable
        // now, at the position it led to.
        if s.t > 0 && !s.obstacles.is_empty() {
            self.gp.observe(s.q, barrier_value(s, &s.q, s.t), rng);
        }
        if s.t > 0 && s.t.is_multiple_of(self.gp.refit_period) {
            self.gp.refit_hyperparameters();
        }
        let qp = gp_cbf_action(s, &mut self.gp, self.gamma);
        let mut d = Decision::plain(qp.action);
        d.diagnostics.fallback = qp.fallback;
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::rng::{self, Stream};
    use approx::assert_relative_eq;

    fn rng() -> Rng {
        rng::stream(0, Stream::Controller)
    }

    #[test]
    fn interpolates_training_targets() {
        let mut gp = GpConstraintModel::new(0.7, 1.0, 1e-6, 50, 500);
        let mut r = rng();
        let xs: Vec<Vec2> =
            (0..15).map(|i| Vec2::new((i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos() * 3.0)).collect();
        for x in &xs {
            gp.observe(*x, x.x * x.x - 2.0 * x.y, &mut r);
        }
        for x in &xs {
            let (m, _) = gp.predict(x).unwrap();
            assert!((m - (x.x * x.x - 2.0 * x.y)).abs() < 1e-4, "{m}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut gp = GpConstraintModel::new(1.2, 1.0, 1e-3, 50, 500);
        let mut r = rng();
        for i in 0..20 {
            let x = Vec2::new(i as f64 * 0.3, (i as f64).sin());
            gp.observe(x, (x.x - 2.0).powi(2) + x.y, &mut r);
        }
        let x = Vec2::new(1.1, 0.2);
        let (_, g) = gp.predict(&x).unwrap();
        let fd = crate::linalg::fd_gradient(|p| gp.clone().predict(&p).unwrap().0, x, 1e-5);
        assert_relative_eq!(g, fd, max_relative = 1e-6);
    }

    #[test]
    fn all_safe_data_leaves_nominal() {
        let mut s = EnvState::new(&EnvConfig { n_obstacles: 0, ..EnvConfig::default() }, 0);
        s.q = Vec2::new(5.0, 5.0);
        s.goal = Vec2::new(9.0, 5.0);
        let mut gp = GpConstraintModel::default();
        let mut r = rng();
        for i in 0..30 {
            gp.observe(Vec2::new(i as f64 * 0.3, 5.0 + (i as f64).cos()), 1.0, &mut r);
        }
        let qp = gp_cbf_action(&s, &mut gp, CBF_GAMMA);
        assert_eq!(qp.action, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn reservoir_caps_size() {
        let mut gp = GpConstraintModel::new(1.0, 1.0, 1e-4, 50, 10);
        let mut r = rng();
        for i in 0..100 {
            gp.observe(Vec2::new(i as f64, 0.0), i as f64, &mut r);
        }
        assert_eq!(gp.len(), 10);
    }

    #[test]
    fn lengthscale_changes_only_at_refits() {
        let config = EnvConfig::default();
        let mut s = EnvState::new(&config, 1);
        let mut c = GpCbfController::default();
        let mut r = rng();
        let mut scales = Vec::new();
        for _ in 0..120 {
            let d = c.act(&Observation { state: &s, context: None }, &mut r);
            scales.push((s.t, c.gp.kernel_lengthscale));
            s = s.step(&d.action);
        }
        for w in scales.windows(2) {
            if w[1].1 != w[0].1 {
                assert_eq!(w[1].0 % 50, 0, "lengthscale changed at step {}", w[1].0);
            }
        }
    }
}
