//! Order-stable Monte Carlo reductions.
//!
//! All reductions here consume per-replica values that were collected in
//! replica order, and sum them left to right. Worker count never enters the
//! arithmetic.

use rayon::prelude::*;
use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Mean and standard error (`sd / sqrt(n)`) of `samples`.
    ///
    /// The mean is clamped into `[min, max]` of the samples. Constant input
    /// therefore reproduces the constant exactly, and the estimate stays
    /// monotone under pointwise monotone transformations of the samples.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = mean_of(samples);
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
        let var = ss / (n - 1) as f64;
        Self { mean, se: (var / n as f64).sqrt() }
    }

    /// True when `target` lies within `k` standard errors of the mean.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

pub(crate) fn mean_of(samples: &[f64]) -> f64 {
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let raw = samples.iter().sum::<f64>() / samples.len() as f64;
    raw.clamp(lo, hi)
}

/// Sample covariance of paired samples with a standard error for it.
///
/// The standard error is the standard error of the mean of the centred
/// products `(a_i - ā)(b_i - b̄)`.
pub fn covariance(a: &[f64], b: &[f64]) -> Estimate {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return Estimate { mean: 0.0, se: 0.0 };
    }
    let ma = mean_of(a);
    let mb = mean_of(b);
    let products: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let sum: f64 = products.iter().sum();
    let cov = sum / (n - 1) as f64;
    let centred = Estimate::from_samples(&products);
    Estimate { mean: cov, se: centred.se }
}

/// Binomial frequency with standard error `sqrt(p(1-p)/n)`.
pub fn frequency(hits: usize, n: usize) -> Estimate {
    if n == 0 {
        return Estimate { mean: f64::NAN, se: f64::NAN };
    }
    let p = hits as f64 / n as f64;
    Estimate { mean: p, se: (p * (1.0 - p) / n as f64).sqrt() }
}

/// Evaluates `f` for replica indices `first..first + n` in parallel and
/// returns the results in replica order.
pub fn map_replicas<T, F>(first: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n as u64).into_par_iter().map(|k| f(first + k)).collect()
}

/// Like [`map_replicas`] with a per-worker scratch value.
pub fn map_replicas_with<S, T, I, F>(first: u64, n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    (0..n as u64).into_par_iter().map_init(init, |scratch, k| f(scratch, first + k)).collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
