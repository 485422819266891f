use super::CostModel;
use crate::density::DensityError;
use crate::linalg::clip_to_disk;
use crate::Vec2;

/// Result of [`plan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOutcome {
    /// Final iterate, clipped to the action disk.
    pub action: Vec2,
    /// Gradient steps actually taken.
    pub iterations: usize,
    /// Set when the score underflowed and descent stopped early.
    pub underflow: bool,
}

/// `k` gradient steps `u ← u - η(∇c(u) - β ŝ(u))` on the free energy,
/// starting from `u_warm`.
pub fn plan(
    cost: &CostModel,
    mut score: impl FnMut(&Vec2) -> Result<Vec2, DensityError>,
    beta: f64,
    eta: f64,
    k: usize,
    u_warm: Vec2,
) -> PlanOutcome {
    if k == 0 {
        return PlanOutcome { action: u_warm, iterations: 0, underflow: false };
    }
    let mut u = u_warm;
    for i in 0..k {
        let s = if beta == 0.0 {
            Vec2::zeros()
        } else {
            match score(&u) {
                Ok(s) => s,
                Err(_) => {
                    return PlanOutcome { action: clip_to_disk(u, cost.u_max), iterations: i, underflow: true };
                }
            }
        };
        u -= eta * (cost.grad(&u) - beta * s);
    }
    PlanOutcome { action: clip_to_disk(u, cost.u_max), iterations: k, underflow: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::KdeModel;
    use approx::assert_relative_eq;

    #[test]
    fn zero_steps_returns_warm_start() {
        let c = CostModel::new(Vec2::zeros(), Vec2::new(5.0, 0.0), 1.0);
        let warm = Vec2::new(3.0, 3.0);
        assert_eq!(plan(&c, |_| Ok(Vec2::zeros()), 1.0, 0.1, 0, warm).action, warm);
    }

    #[test]
    fn plain_descent_reaches_clipped_target() {
        let c = CostModel::new(Vec2::zeros(), Vec2::new(0.3, -0.4), 1.0);
        let out = plan(&c, |_| Ok(Vec2::zeros()), 0.0, 0.1, 500, Vec2::zeros());
        assert_relative_eq!(out.action, Vec2::new(0.3, -0.4), epsilon = 1e-12);
        let far = CostModel::new(Vec2::zeros(), Vec2::new(6.0, 8.0), 1.0);
        let out = plan(&far, |_| Ok(Vec2::zeros()), 0.0, 0.1, 500, Vec2::zeros());
        assert_relative_eq!(out.action, Vec2::new(0.6, 0.8), epsilon = 1e-12);
    }

    #[test]
    fn single_gaussian_fixed_point() {
        let h = 0.4;
        let peak = Vec2::new(0.1, 0.2);
        let model = KdeModel::new(vec![peak], h).unwrap();
        let c = CostModel::new(Vec2::new(1.0, 1.0), Vec2::new(1.5, 0.8), 1.0);
        let beta = 0.7;
        let v = c.target();
        let b = beta / (h * h);
        let expected = (2.0 * v + b * peak) / (2.0 + b);
        let eta = 1.0 / (2.0 + b);
        let out = plan(&c, |u| model.score(u), beta, eta, 500, Vec2::zeros());
        assert_relative_eq!(out.action, expected, epsilon = 1e-6);
        assert!(!out.underflow);
    }

    #[test]
    fn underflow_stops_at_last_valid_iterate() {
        let c = CostModel::new(Vec2::zeros(), Vec2::new(1.0, 0.0), 1.0);
        let warm = Vec2::new(0.5, 0.0);
        let out = plan(&c, |_| Err(DensityError::DensityUnderflow), 1.0, 0.1, 10, warm);
        assert!(out.underflow);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.action, warm);
    }
}
