use serde::Serialize;

use crate::gmc::total_masses;
use crate::kernel::CovarianceModel;
use crate::stats::{frequency, ols_slope};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub gamma: f64,
    pub eps_values: Vec<f64>,
    /// Empirical `P(μ(𝔻) < ε)`.
    pub frequencies: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Wilson score interval at z = 3.
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub log_eps: Vec<f64>,
    /// `ln` of each frequency, `None` where it is zero.
    pub log_frequencies: Vec<Option<f64>>,
    /// Fitted slope of `ln P` against `ln ε` over the nonzero frequencies.
    pub log_log_slope: Option<f64>,
    pub replicas: usize,
    pub seed: u64,
}

fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Small-ball frequencies `P(μ_γ(𝔻) < ε)` on replicas `0..n_replicas`.
pub fn small_ball_tail(
    model: &CovarianceModel,
    gamma: f64,
    eps_values: &[f64],
    n_replicas: usize,
    seed: u64,
) -> TailReport {
    assert!(eps_values.iter().all(|&e| e > 0.0), "ε values must be positive");
    assert!(n_replicas > 0);
    let masses = total_masses(model, gamma, seed, 0, n_replicas);
    let mut report = TailReport {
        gamma,
        eps_values: eps_values.to_vec(),
        frequencies: vec![],
        standard_errors: vec![],
        ci_low: vec![],
        ci_high: vec![],
        log_eps: eps_values.iter().map(|e| e.ln()).collect(),
        log_frequencies: vec![],
        log_log_slope: None,
        replicas: n_replicas,
        seed,
    };
    for &eps in eps_values {
        let hits = masses.iter().filter(|&&m| m < eps).count();
        let f = frequency(hits, n_replicas);
        let (lo, hi) = wilson(hits, n_replicas, 3.0);
        report.frequencies.push(f.mean);
        report.standard_errors.push(f.se);
        report.ci_low.push(lo);
        report.ci_high.push(hi);
        report.log_frequencies.push((hits > 0).then(|| f.mean.ln()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        report.log_eps.iter().zip(&report.log_frequencies).filter_map(|(x, y)| y.map(|y| (*x, y))).unzip();
    report.log_log_slope = ols_slope(&xs, &ys);
    report
}
