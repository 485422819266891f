/// `β_t = β* (1 + C/√N_t)`.
pub fn beta_schedule(beta_star: f64, c: f64, n_cumulative: u64) -> f64 {
    assert!(n_cumulative >= 1, "schedule needs at least one sample");
    beta_star * (1.0 + c / (n_cumulative as f64).sqrt())
}

/// `η = min(η₀, 1/(L_c + βΛ))`.
pub fn step_size(l_c: f64, beta: f64, lambda_max: f64, eta0: f64) -> f64 {
    eta0.min(1.0 / (l_c + beta * lambda_max))
}
