use std::f64::consts::PI;

use super::{DensityError, SampleBuffer, UNDERFLOW_LOG};
use crate::{Mat2, Vec2};

const BANDWIDTH_CONSTANT: f64 = 1.06;
const SIGMA_FLOOR: f64 = 0.02;

/// Mean per-axis standard deviation and Kish effective sample size.
///
/// With weights the variance uses the reliability-weight correction
/// `Σw(x-m)² / (1 - Σw²)`, which reduces to the unbiased sample variance for
/// uniform weights. A single point (or `n_eff = 1`) has zero spread.
pub fn spread(points: &[Vec2], weights: Option<&[f64]>) -> (f64, f64) {
    let n = points.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let uniform = 1.0 / n as f64;
    let w = |i: usize| weights.map_or(uniform, |w| w[i]);
    let total: f64 = (0..n).map(w).sum();
    let mean = (0..n).fold(Vec2::zeros(), |acc, i| acc + points[i] * (w(i) / total));
    let sum_sq: f64 = (0..n).map(|i| (w(i) / total).powi(2)).sum();
    let n_eff = if weights.is_some() { 1.0 / sum_sq } else { n as f64 };
    if n_eff <= 1.0 + 1e-12 {
        return (0.0, n_eff);
    }
    let mut var = Vec2::zeros();
    for (i, p) in points.iter().enumerate() {
        let d = p - mean;
        var += d.component_mul(&d) * (w(i) / total);
    }
    var /= 1.0 - sum_sq;
    (0.5 * (var.x.sqrt() + var.y.sqrt()), n_eff)
}

/// `h = 1.06 · max(σ̂, 0.02) · n^(-1/(dim+4))`.
pub fn bandwidth_rule(sigma: f64, n: f64, dim: usize) -> f64 {
    BANDWIDTH_CONSTANT * sigma.max(SIGMA_FLOOR) * n.max(1.0).powf(-1.0 / (dim as f64 + 4.0))
}

/// Density, score and Fisher information at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeEval {
    pub log_density: f64,
    pub score: Vec2,
    pub fisher: Mat2,
}

/// Isotropic Gaussian KDE over actions, optionally with per-point weights.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    points: Vec<Vec2>,
    /// `ln wᵢ` of the normalized weights; `None` means uniform.
    log_weights: Option<Vec<f64>>,
    bandwidth: f64,
}

impl KdeModel {
    pub fn new(points: Vec<Vec2>, bandwidth: f64) -> Result<Self, DensityError> {
        if points.is_empty() {
            return Err(DensityError::EmptyBuffer);
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(DensityError::InvalidBandwidth(bandwidth));
        }
        Ok(Self { points, log_weights: None, bandwidth })
    }

    /// Weighted KDE; `weights` need not be normalized but must be non-negative
    /// with a positive sum.
    pub fn weighted(points: Vec<Vec2>, weights: &[f64], bandwidth: f64) -> Result<Self, DensityError> {
        assert_eq!(points.len(), weights.len());
        let mut model = Self::new(points, bandwidth)?;
        let total: f64 = weights.iter().sum();
        model.log_weights = Some(weights.iter().map(|w| (w / total).ln()).collect());
        Ok(model)
    }

    /// Fit with the rule-of-thumb bandwidth.
    pub fn fit(points: Vec<Vec2>) -> Result<Self, DensityError> {
        let (sigma, n) = spread(&points, None);
        let h = bandwidth_rule(sigma, n, 2);
        Self::new(points, h)
    }

    /// Marginal model over the buffer's samples re-expressed from `origin`.
    pub fn fit_marginal(buffer: &SampleBuffer, origin: Vec2, u_max: f64) -> Result<Self, DensityError> {
        Self::fit(buffer.actions_from(origin, u_max).0)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Normalized weight of point `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match &self.log_weights {
            Some(lw) => lw[i].exp(),
            None => 1.0 / self.points.len() as f64,
        }
    }

    /// Kish effective sample size.
    pub fn effective_n(&self) -> f64 {
        match &self.log_weights {
            Some(lw) => 1.0 / lw.iter().map(|l| (2.0 * l).exp()).sum::<f64>(),
            None => self.points.len() as f64,
        }
    }

    /// Curvature upper bound `Λ = 1/h²`.
    pub fn lambda_max(&self) -> f64 {
        1.0 / (self.bandwidth * self.bandwidth)
    }

    fn log_norm(&self) -> f64 {
        -(2.0 * PI * self.bandwidth * self.bandwidth).ln()
    }

    /// `ln wᵢ - ‖u-Uᵢ‖²/(2h²)` for every point (kernel normalization excluded).
    fn log_terms<'a>(&'a self, u: &'a Vec2) -> impl Iterator<Item = (&'a Vec2, f64)> + 'a {
        let inv = 0.5 / (self.bandwidth * self.bandwidth);
        let uniform = -(self.points.len() as f64).ln();
        self.points.iter().enumerate().map(move |(i, p)| {
            let lw = self.log_weights.as_ref().map_or(uniform, |w| w[i]);
            (p, lw - (p - u).norm_squared() * inv)
        })
    }

    pub fn log_density(&self, u: &Vec2) -> f64 {
        // Streaming log-sum-exp: rescale the running sum whenever the max grows.
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (_, t) in self.log_terms(u) {
            if t > max {
                sum = sum * (max - t).exp() + 1.0;
                max = t;
            } else {
                sum += (t - max).exp();
            }
        }
        max + sum.ln() + self.log_norm()
    }

    pub fn density(&self, u: &Vec2) -> f64 {
        self.log_density(u).exp()
    }

    /// Whether the density at `u` is below the underflow floor.
    pub fn underflows(&self, u: &Vec2) -> bool {
        self.log_density(u) < UNDERFLOW_LOG
    }

    /// Log density, score and Fisher information in one pass, without the
    /// underflow guard. Responsibilities are always well defined thanks to
    /// the max-shift, so far-field queries return the nearest-kernel limit.
    pub fn evaluate_unchecked(&self, u: &Vec2) -> KdeEval {
        let inv_h2 = 1.0 / (self.bandwidth * self.bandwidth);
        let mut max = f64::NEG_INFINITY;
        let mut total = 0.0;
        let mut first = Vec2::zeros();
        let mut second = Mat2::zeros();
        for (p, t) in self.log_terms(u) {
            let d = (p - u) * inv_h2;
            let outer = d * d.transpose();
            if t > max {
                let scale = (max - t).exp();
                total = total * scale + 1.0;
                first = first * scale + d;
                second = second * scale + outer;
                max = t;
            } else {
                let r = (t - max).exp();
                total += r;
                first += d * r;
                second += outer * r;
            }
        }
        let score = first / total;
        let cov = second / total - score * score.transpose();
        let fisher = Mat2::identity() * inv_h2 - cov;
        let fisher = 0.5 * (fisher + fisher.transpose());
        KdeEval { log_density: max + total.ln() + self.log_norm(), score, fisher }
    }

    /// Guarded [`KdeModel::evaluate_unchecked`].
    pub fn evaluate(&self, u: &Vec2) -> Result<KdeEval, DensityError> {
        let e = self.evaluate_unchecked(u);
        if e.log_density < UNDERFLOW_LOG {
            return Err(DensityError::DensityUnderflow);
        }
        Ok(e)
    }

    /// `∇ ln p̂(u) = Σ rᵢ (Uᵢ - u) / h²`.
    pub fn score(&self, u: &Vec2) -> Result<Vec2, DensityError> {
        self.evaluate(u).map(|e| e.score)
    }

    /// `-∇² ln p̂(u) = I/h² - Cov_r((Uᵢ - u)/h²)`.
    pub fn fisher_info(&self, u: &Vec2) -> Result<Mat2, DensityError> {
        self.evaluate(u).map(|e| e.fisher)
    }

    /// Score without the underflow guard.
    pub fn score_unchecked(&self, u: &Vec2) -> Vec2 {
        self.evaluate_unchecked(u).score
    }
}

/// Mean squared score discrepancy `mean ‖s_a(u) - s_ref(u)‖²` over `eval_points`.
pub fn score_error(model: &KdeModel, reference: &KdeModel, eval_points: &[Vec2]) -> f64 {
    if eval_points.is_empty() {
        return 0.0;
    }
    let total: f64 =
        eval_points.iter().map(|u| (model.score_unchecked(u) - reference.score_unchecked(u)).norm_squared()).sum();
    total / eval_points.len() as f64
}
