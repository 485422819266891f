use super::kde::{bandwidth_rule, spread};
use super::{DensityError, KdeModel, SampleBuffer, UNDERFLOW_LOG};
use crate::env::{Context, CONTEXT_DIM};
use crate::Vec2;

const CONTEXT_BANDWIDTH_CONSTANT: f64 = 1.06;
const CONTEXT_BANDWIDTH_FLOOR: f64 = 0.05;
/// Conditioned weights below this fraction of the total are dropped.
const PRUNE_WEIGHT: f64 = 1e-16;

/// `h_ξ = max(1.06 · σ̂_ξ · N^(-1/(d_ξ+4)), 0.05)` with `σ̂_ξ` the mean
/// per-coordinate standard deviation of the stored contexts.
pub fn context_bandwidth(contexts: &[Context]) -> f64 {
    let n = contexts.len();
    if n < 2 {
        return CONTEXT_BANDWIDTH_FLOOR;
    }
    let nf = n as f64;
    let mut sigma = 0.0;
    for d in 0..CONTEXT_DIM {
        let mean = contexts.iter().map(|c| c[d]).sum::<f64>() / nf;
        let var = contexts.iter().map(|c| (c[d] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        sigma += var.sqrt();
    }
    sigma /= CONTEXT_DIM as f64;
    let h = CONTEXT_BANDWIDTH_CONSTANT * sigma * nf.powf(-1.0 / (CONTEXT_DIM as f64 + 4.0));
    h.max(CONTEXT_BANDWIDTH_FLOOR)
}

/// Product-kernel KDE over `(action, context)` pairs.
///
/// Conditioning on a context yields a weighted action KDE whose bandwidth is
/// re-derived from the weighted spread and Kish effective sample size of the
/// conditioned slice, so a buffer holding many unrelated contexts does not
/// shrink the kernel of the few that match.
#[derive(Debug, Clone, PartialEq)]
pub struct CondKdeModel {
    points: Vec<Vec2>,
    contexts: Vec<Context>,
    bandwidth_u: f64,
    bandwidth_ctx: f64,
}

impl CondKdeModel {
    pub fn new(points: Vec<Vec2>, contexts: Vec<Context>, bandwidth_ctx: f64) -> Result<Self, DensityError> {
        assert_eq!(points.len(), contexts.len(), "one context per action");
        if points.is_empty() {
            return Err(DensityError::EmptyBuffer);
        }
        if !(bandwidth_ctx > 0.0) {
            return Err(DensityError::InvalidBandwidth(bandwidth_ctx));
        }
        let (sigma, n) = spread(&points, None);
        let bandwidth_u = bandwidth_rule(sigma, n, 2);
        Ok(Self { points, contexts, bandwidth_u, bandwidth_ctx })
    }

    /// Fit to every buffer entry that carries a context, with actions
    /// re-expressed from `origin`.
    pub fn fit(buffer: &SampleBuffer, origin: Vec2, u_max: f64) -> Result<Self, DensityError> {
        let (actions, index) = buffer.actions_from(origin, u_max);
        let mut points = Vec::with_capacity(actions.len());
        let mut contexts = Vec::with_capacity(actions.len());
        for (a, i) in actions.into_iter().zip(index) {
            if let Some(c) = buffer.get(i).and_then(|e| e.context) {
                points.push(a);
                contexts.push(c);
            }
        }
        let h_ctx = context_bandwidth(&contexts);
        Self::new(points, contexts, h_ctx)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Action bandwidth of the unconditioned joint fit.
    pub fn bandwidth_u(&self) -> f64 {
        self.bandwidth_u
    }

    pub fn bandwidth_ctx(&self) -> f64 {
        self.bandwidth_ctx
    }

    pub fn with_bandwidth_ctx(mut self, h: f64) -> Self {
        assert!(h > 0.0);
        self.bandwidth_ctx = h;
        self
    }

    /// Normalized context weights `wᵢ ∝ K_{h_ξ}(ξ - ξᵢ)`.
    pub fn context_weights(&self, xi: &Context) -> Result<Vec<f64>, DensityError> {
        let inv = 0.5 / (self.bandwidth_ctx * self.bandwidth_ctx);
        let logs: Vec<f64> = self
            .contexts
            .iter()
            .map(|c| -c.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * inv)
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max < UNDERFLOW_LOG {
            return Err(DensityError::ContextUnderflow);
        }
        let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    }

    /// Weighted action KDE `p̂(u | ξ)`.
    pub fn conditional_model(&self, xi: &Context) -> Result<KdeModel, DensityError> {
        let weights = self.context_weights(xi)?;
        let (points, kept): (Vec<Vec2>, Vec<f64>) =
            self.points.iter().zip(&weights).filter(|(_, &w)| w >= PRUNE_WEIGHT).map(|(p, &w)| (*p, w)).unzip();
        let (sigma, n_eff) = spread(&points, Some(&kept));
        KdeModel::weighted(points, &kept, bandwidth_rule(sigma, n_eff, 2))
    }
}
