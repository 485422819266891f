//! Small numeric helpers shared across modules.

use crate::{Mat2, Vec2};

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - radius, mean + radius)
}

pub fn lambda_min(m: &Mat2) -> f64 {
    sym_eigenvalues(m).0
}

pub fn lambda_max(m: &Mat2) -> f64 {
    sym_eigenvalues(m).1
}

/// Numerically stable `ln Σ exp(xᵢ)`. Returns `-∞` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Project `u` onto the closed disk of radius `radius` around the origin.
pub fn clip_to_disk(u: Vec2, radius: f64) -> Vec2 {
    let n = u.norm();
    if n > radius {
        u * (radius / n)
    } else {
        u
    }
}

/// Percentile with linear interpolation between order statistics
/// (rank `p/100 · (n-1)`). `values` must be non-empty.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty set");
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Central-difference gradient with one Richardson refinement.
pub fn fd_gradient(f: impl Fn(Vec2) -> f64, u: Vec2, step: f64) -> Vec2 {
    let central = |h: f64| {
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        Vec2::new((f(u + ex) - f(u - ex)) / (2.0 * h), (f(u + ey) - f(u - ey)) / (2.0 * h))
    };
    let coarse = central(step);
    let fine = central(0.5 * step);
    (4.0 * fine - coarse) / 3.0
}

/// Central-difference Hessian with one Richardson refinement; symmetric.
pub fn fd_hessian(f: impl Fn(Vec2) -> f64, u: Vec2, step: f64) -> Mat2 {
    let central = |h: f64| {
        let f0 = f(u);
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let fxx = (f(u + ex) - 2.0 * f0 + f(u - ex)) / (h * h);
        let fyy = (f(u + ey) - 2.0 * f0 + f(u - ey)) / (h * h);
        let fxy = (f(u + ex + ey) - f(u + ex - ey) - f(u - ex + ey) + f(u - ex - ey)) / (4.0 * h * h);
        Mat2::new(fxx, fxy, fxy, fyy)
    };
    let coarse = central(step);
    let fine = central(0.5 * step);
    (4.0 * fine - coarse) / 3.0
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Pearson correlation coefficient; `NaN` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
