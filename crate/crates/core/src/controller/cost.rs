use crate::Vec2;

/// Smoothness constant of the tracking cost.
pub const L_C: f64 = 2.0;

/// Tracking cost `c(u) = ‖q + u - g‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub q: Vec2,
    pub goal: Vec2,
    pub u_max: f64,
}

impl CostModel {
    pub fn new(q: Vec2, goal: Vec2, u_max: f64) -> Self {
        Self { q, goal, u_max }
    }

    pub fn value(&self, u: &Vec2) -> f64 {
        (self.q + u - self.goal).norm_squared()
    }

    pub fn grad(&self, u: &Vec2) -> Vec2 {
        2.0 * (self.q + u - self.goal)
    }

    pub fn cost_and_grad(&self, u: &Vec2) -> (f64, Vec2) {
        (self.value(u), self.grad(u))
    }

    /// Gradient bound over the action disk, `2(‖q - g‖ + u_max)`.
    pub fn g_c(&self) -> f64 {
        2.0 * ((self.q - self.goal).norm() + self.u_max)
    }

    /// Unconstrained minimizer `g - q`.
    pub fn target(&self) -> Vec2 {
        self.goal - self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fd_gradient;
    use approx::assert_relative_eq;

    #[test]
    fn minimum_at_goal_offset() {
        let c = CostModel::new(Vec2::new(1.0, 2.0), Vec2::new(1.5, 1.0), 1.0);
        let (v, g) = c.cost_and_grad(&c.target());
        assert_eq!(v, 0.0);
        assert_eq!(g, Vec2::zeros());
    }

    #[test]
    fn arithmetic_example() {
        let c = CostModel::new(Vec2::zeros(), Vec2::new(3.0, 4.0), 1.0);
        assert_eq!(c.cost_and_grad(&Vec2::zeros()), (25.0, Vec2::new(-6.0, -8.0)));
        assert_eq!(c.g_c(), 12.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = CostModel::new(Vec2::new(0.3, -1.2), Vec2::new(4.0, 2.5), 1.0);
        let u = Vec2::new(0.2, 0.7);
        assert_relative_eq!(fd_gradient(|v| c.value(&v), u, 1e-3), c.grad(&u), epsilon = 1e-8);
    }
}
