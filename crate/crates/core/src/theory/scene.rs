use crate::density::KdeModel;
use crate::{Mat2, Vec2};

/// Regular `resolution × resolution` lattice over an axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: Vec2,
    pub max: Vec2,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(min: Vec2, max: Vec2, resolution: usize) -> Self {
        assert!(resolution >= 2, "grid needs at least two nodes per axis");
        assert!(max.x > min.x && max.y > min.y, "empty grid box");
        Self { min, max, resolution }
    }

    /// Square box centered on `center` with half-width `half`.
    pub fn centered(center: Vec2, half: f64, resolution: usize) -> Self {
        Self::new(center - Vec2::new(half, half), center + Vec2::new(half, half), resolution)
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing per axis.
    pub fn step(&self) -> Vec2 {
        (self.max - self.min) / (self.resolution - 1) as f64
    }

    /// Length of a cell diagonal.
    pub fn cell(&self) -> f64 {
        self.step().norm()
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        let s = self.step();
        Vec2::new(self.min.x + j as f64 * s.x, self.min.y + i as f64 * s.y)
    }

    pub fn point_at(&self, index: usize) -> Vec2 {
        self.point(index / self.resolution, index % self.resolution)
    }

    pub fn points(&self) -> Vec<Vec2> {
        (0..self.len()).map(|k| self.point_at(k)).collect()
    }

    /// The same box with `2n - 1` nodes per axis, so every coarse node survives.
    pub fn refined(&self) -> Self {
        Self { resolution: 2 * self.resolution - 1, ..*self }
    }

    /// Indices of the 8-neighborhood of `index`.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.resolution as isize;
        let (i, j) = ((index / self.resolution) as isize, (index % self.resolution) as isize);
        (-1..=1)
            .flat_map(move |di| (-1..=1).map(move |dj| (i + di, j + dj)))
            .filter(move |&(a, b)| (a, b) != (i, j) && a >= 0 && b >= 0 && a < n && b < n)
            .map(move |(a, b)| (a * n + b) as usize)
    }

    pub fn on_edge(&self, index: usize) -> bool {
        let (i, j) = (index / self.resolution, index % self.resolution);
        i == 0 || j == 0 || i + 1 == self.resolution || j + 1 == self.resolution
    }
}

/// KDE scene with a quadratic task cost `w ‖q + u - g‖²`.
///
/// `offset` adds a constant to the density (not to `ln p̂`) to model a
/// uniform bias between a reference density and its estimate. Only the
/// level-set check accepts a nonzero offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub model: KdeModel,
    pub offset: f64,
    pub q: Vec2,
    pub goal: Vec2,
    pub cost_weight: f64,
    pub beta: f64,
    pub alpha: f64,
    pub grid: GridSpec,
}

impl SyntheticScene {
    /// Scene whose grid covers the `alpha`-superlevel set with a `3h` margin.
    pub fn new(model: KdeModel, q: Vec2, goal: Vec2, beta: f64, alpha: f64, resolution: usize) -> Self {
        let grid = covering_grid(&model, alpha, resolution);
        Self { model, offset: 0.0, q, goal, cost_weight: 1.0, beta, alpha, grid }
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn with_offset(&self, offset: f64) -> Self {
        Self { offset, ..self.clone() }
    }

    pub fn bandwidth(&self) -> f64 {
        self.model.bandwidth()
    }

    pub fn density(&self, u: &Vec2) -> f64 {
        self.model.density(u) + self.offset
    }

    /// `∇p̂ = p̂ ŝ`.
    pub fn density_gradient(&self, u: &Vec2) -> Vec2 {
        let e = self.model.evaluate_unchecked(u);
        e.score * e.log_density.exp()
    }

    pub fn cost(&self, u: &Vec2) -> f64 {
        self.cost_weight * (self.q + u - self.goal).norm_squared()
    }

    pub fn cost_grad(&self, u: &Vec2) -> Vec2 {
        2.0 * self.cost_weight * (self.q + u - self.goal)
    }

    /// Smoothness constant of the cost.
    pub fn l_c(&self) -> f64 {
        2.0 * self.cost_weight
    }

    /// `F(u) = c(u) - β ln p̂(u)`.
    pub fn free_energy(&self, u: &Vec2) -> f64 {
        self.cost(u) - self.beta * self.model.log_density(u)
    }

    pub fn free_energy_grad(&self, u: &Vec2) -> Vec2 {
        self.cost_grad(u) - self.beta * self.model.score_unchecked(u)
    }

    pub fn fisher(&self, u: &Vec2) -> Mat2 {
        self.model.evaluate_unchecked(u).fisher
    }

    /// Densities at every grid node.
    pub fn density_field(&self) -> Vec<f64> {
        self.grid.points().iter().map(|u| self.density(u)).collect()
    }

    pub fn superlevel_mask(&self) -> Vec<bool> {
        self.density_field().into_iter().map(|d| d >= self.alpha).collect()
    }
}

/// Box around the KDE points wide enough to contain `{p̂ ≥ alpha}` plus `3h`.
///
/// A point with `p̂(u) ≥ α` lies within `h √(2 ln(1/(2π h² α)))` of some
/// kernel center, since no kernel exceeds its own peak.
pub fn covering_grid(model: &KdeModel, alpha: f64, resolution: usize) -> GridSpec {
    let h = model.bandwidth();
    let peak = 1.0 / (2.0 * std::f64::consts::PI * h * h);
    let reach = if alpha > 0.0 && alpha < peak { h * (2.0 * (peak / alpha).ln()).sqrt() } else { 0.0 };
    let margin = reach + 3.0 * h;
    let pts = model.points();
    let lo = pts.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |a, p| a.inf(p));
    let hi = pts.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |a, p| a.sup(p));
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo).max() + margin;
    GridSpec::centered(center, half, resolution)
}

/// Discrete-context mixture `p(u) = Σ πᵢ p(u | ξᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureScene {
    pub weights: Vec<f64>,
    pub components: Vec<KdeModel>,
    pub q: Vec2,
    pub goal: Vec2,
    pub beta: f64,
    pub alpha: f64,
    pub grid: GridSpec,
}

/// Per-context quantities at one action.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureEval {
    /// Posterior `w(ξ | u) ∝ p(u | ξ) π(ξ)`.
    pub posterior: Vec<f64>,
    pub scores: Vec<Vec2>,
    /// `∇² ln p(u | ξ)` per context.
    pub hessians: Vec<Mat2>,
    pub log_marginal: f64,
}

impl MixtureEval {
    pub fn expected_hessian(&self) -> Mat2 {
        self.posterior.iter().zip(&self.hessians).fold(Mat2::zeros(), |acc, (w, h)| acc + h * *w)
    }

    pub fn mean_score(&self) -> Vec2 {
        self.posterior.iter().zip(&self.scores).fold(Vec2::zeros(), |acc, (w, s)| acc + s * *w)
    }

    pub fn score_covariance(&self) -> Mat2 {
        let mean = self.mean_score();
        self.posterior.iter().zip(&self.scores).fold(Mat2::zeros(), |acc, (w, s)| {
            let d = s - mean;
            acc + d * d.transpose() * *w
        })
    }

    /// `E_w[∇² ln p(u|ξ)] + Cov_w(s(u|ξ))`.
    pub fn marginal_hessian(&self) -> Mat2 {
        self.expected_hessian() + self.score_covariance()
    }
}

impl MixtureScene {
    pub fn new(weights: Vec<f64>, components: Vec<KdeModel>, alpha: f64, resolution: usize) -> Self {
        assert_eq!(weights.len(), components.len());
        assert!(!weights.is_empty());
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let grids: Vec<GridSpec> = components.iter().map(|c| covering_grid(c, alpha, 2)).collect();
        let lo = grids.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |a, g| a.inf(&g.min));
        let hi = grids.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |a, g| a.sup(&g.max));
        let grid = GridSpec::new(lo, hi, resolution);
        Self { weights, components, q: Vec2::zeros(), goal: Vec2::zeros(), beta: 1.0, alpha, grid }
    }

    pub fn log_marginal(&self, u: &Vec2) -> f64 {
        let terms: Vec<f64> =
            self.weights.iter().zip(&self.components).map(|(w, c)| w.ln() + c.log_density(u)).collect();
        crate::linalg::log_sum_exp(&terms)
    }

    pub fn marginal(&self, u: &Vec2) -> f64 {
        self.log_marginal(u).exp()
    }

    pub fn evaluate(&self, u: &Vec2) -> MixtureEval {
        let evals: Vec<_> = self.components.iter().map(|c| c.evaluate_unchecked(u)).collect();
        let logs: Vec<f64> = self.weights.iter().zip(&evals).map(|(w, e)| w.ln() + e.log_density).collect();
        let log_marginal = crate::linalg::log_sum_exp(&logs);
        MixtureEval {
            posterior: logs.iter().map(|l| (l - log_marginal).exp()).collect(),
            scores: evals.iter().map(|e| e.score).collect(),
            hessians: evals.iter().map(|e| -e.fisher).collect(),
            log_marginal,
        }
    }

    /// Largest `‖∇c‖` over `points`, with `c = ‖q + u - g‖²`.
    pub fn cost_gradient_bound(&self, points: &[Vec2]) -> f64 {
        points.iter().map(|u| 2.0 * (self.q + u - self.goal).norm()).fold(0.0, f64::max)
    }
}

/// Connected components (8-connectivity) of a grid mask, as lists of indices.
pub fn components(grid: &GridSpec, mask: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < members.len() {
            let k = members[head];
            head += 1;
            for nb in grid.neighbors(k) {
                if mask[nb] && label[nb] == usize::MAX {
                    label[nb] = id;
                    members.push(nb);
                }
            }
        }
        out.push(members);
    }
    out
}

/// Grid nodes of `members` that are local maxima of `field` over their neighbors.
pub fn local_maxima(grid: &GridSpec, field: &[f64], members: &[usize]) -> Vec<usize> {
    members.iter().copied().filter(|&k| grid.neighbors(k).all(|nb| field[nb] <= field[k])).collect()
}

/// Members whose whole neighborhood is also in the mask and off the grid edge.
pub fn interior(grid: &GridSpec, mask: &[bool], members: &[usize]) -> Vec<usize> {
    members.iter().copied().filter(|&k| !grid.on_edge(k) && grid.neighbors(k).all(|nb| mask[nb])).collect()
}

/// Members with at least one neighbor outside the mask.
pub fn boundary(grid: &GridSpec, mask: &[bool], members: &[usize]) -> Vec<usize> {
    members.iter().copied().filter(|&k| grid.on_edge(k) || grid.neighbors(k).any(|nb| !mask[nb])).collect()
}

pub fn argmin_by(indices: &[usize], f: impl Fn(usize) -> f64) -> Option<usize> {
    indices.iter().copied().map(|k| (k, f(k))).min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))).map(|x| x.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_grid_keeps_coarse_nodes() {
        let g = GridSpec::new(Vec2::new(-1.0, -2.0), Vec2::new(1.0, 2.0), 5);
        let r = g.refined();
        assert_eq!(r.resolution, 9);
        assert_eq!(r.point(2, 4), g.point(1, 2));
    }

    #[test]
    fn neighbor_counts() {
        let g = GridSpec::new(Vec2::zeros(), Vec2::new(1.0, 1.0), 4);
        assert_eq!(g.neighbors(0).count(), 3);
        assert_eq!(g.neighbors(5).count(), 8);
        assert!(g.on_edge(3) && !g.on_edge(5));
    }

    #[test]
    fn covering_grid_contains_superlevel_set() {
        let m = KdeModel::new(vec![Vec2::new(1.0, 0.5)], 0.2).unwrap();
        let alpha = 0.05 * m.density(&Vec2::new(1.0, 0.5));
        let s = SyntheticScene::new(m, Vec2::zeros(), Vec2::zeros(), 1.0, alpha, 81);
        let mask = s.superlevel_mask();
        assert!(mask.iter().any(|&b| b));
        assert!((0..s.grid.len()).filter(|&k| s.grid.on_edge(k)).all(|k| !mask[k]));
    }

    #[test]
    fn two_blobs_are_two_components() {
        let g = GridSpec::new(Vec2::zeros(), Vec2::new(4.0, 0.0 + 1.0), 5);
        let mut mask = vec![false; g.len()];
        mask[0] = true;
        mask[1] = true;
        mask[4] = true;
        assert_eq!(components(&g, &mask).len(), 2);
    }

    #[test]
    fn mixture_posterior_sums_to_one() {
        let comps = vec![
            KdeModel::new(vec![Vec2::zeros()], 0.3).unwrap(),
            KdeModel::new(vec![Vec2::new(0.4, 0.1)], 0.3).unwrap(),
        ];
        let m = MixtureScene::new(vec![1.0, 3.0], comps, 0.1, 21);
        let e = m.evaluate(&Vec2::new(0.1, 0.0));
        assert!((e.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((e.log_marginal - m.log_marginal(&Vec2::new(0.1, 0.0))).abs() < 1e-12);
    }
}
