//! Monte Carlo checks of correlation and comparison inequalities for the
//! regularized chaos, plus the exact PSD check of the domain-Markov split.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::field::{sample_field_into, FieldScratch};
use crate::gmc::total_mass;
use crate::kernel::{
    build_covariance, default_epsilon, markov_difference_psd, CovarianceModel, GreenKernel, MARKOV_PSD_TOL,
};
use crate::measure::AtomicMeasure;
use crate::stats::{covariance, map_replicas_with, Estimate};
use crate::{Error, Result};

/// Relative slack when comparing two repaired covariance matrices entrywise.
const ORDERING_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Fkg,
    Kahane,
    MarkovPsd,
}

/// `pass ⇔ statistic ≥ threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityVerdict {
    pub name: InequalityKind,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    /// Estimates behind the statistic, when it is a Monte Carlo comparison.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<Estimate>,
    /// Sub-disk radius for the Markov and Kahane checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl InequalityVerdict {
    fn new(name: InequalityKind, statistic: f64, threshold: f64) -> Self {
        Self {
            name,
            statistic,
            threshold,
            pass: statistic >= threshold,
            replicas: None,
            seed: None,
            estimates: Vec::new(),
            radius: None,
        }
    }

    fn monte_carlo(mut self, replicas: usize, seed: u64, estimates: Vec<Estimate>) -> Self {
        self.replicas = Some(replicas);
        self.seed = Some(seed);
        self.estimates = estimates;
        self
    }
}

/// The model does not meet the hypothesis of the inequality; the check is
/// skipped rather than failed.
#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("{check:?} skipped: covariance entry ({i}, {j}) = {value:e} is negative")]
    NegativeCovariance { check: InequalityKind, i: usize, j: usize, value: f64 },
    #[error("{check:?} skipped: inner kernel exceeds outer kernel at ({i}, {j}): {inner:e} > {outer:e}")]
    OrderingViolated { check: InequalityKind, i: usize, j: usize, inner: f64, outer: f64 },
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {name} = {v}")))
    }
}

/// `Cov(exp(−s μ(𝔻)), exp(−t μ(𝔻)))` for a model with nonnegative
/// covariance. Both functionals decrease in the field, so the covariance is
/// nonnegative; passes when the estimate is at least `−3 SE`.
pub fn fkg_check(
    model: &CovarianceModel,
    gamma: f64,
    s: f64,
    t: f64,
    n_replicas: usize,
    seed: u64,
) -> Result<InequalityVerdict> {
    check_positive("s", s)?;
    check_positive("t", t)?;
    if let Some((i, j, value)) = first_negative(model.matrix()) {
        return Err(InequalityError::NegativeCovariance { check: InequalityKind::Fkg, i, j, value }.into());
    }
    let masses = crate::gmc::total_masses(model, gamma, seed, 0, n_replicas);
    let a: Vec<f64> = masses.iter().map(|m| (-s * m).exp()).collect();
    let b: Vec<f64> = masses.iter().map(|m| (-t * m).exp()).collect();
    let cov = covariance(&a, &b);
    Ok(InequalityVerdict::new(InequalityKind::Fkg, cov.mean, -3.0 * cov.se).monte_carlo(n_replicas, seed, vec![cov]))
}

fn first_negative(m: &DMatrix<f64>) -> Option<(usize, usize, f64)> {
    (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| (i, j, m[(i, j)]))
        .find(|&(_, _, v)| v < 0.0)
}

/// Compares `E[exp(−t μ)]` under the sub-disk kernel of radius `r_inner` and
/// the unit-disk kernel. Both models share the regularization scale and the
/// normal draws of each replica.
///
/// The sub-disk kernel is entrywise smaller, so for the convex map
/// `x ↦ exp(−tx)` its estimate is at most the disk estimate. The statistic is
/// `E_disk − E_inner`, compared against `−3 SE` of the paired differences.
pub fn kahane_check(
    measure: impl Into<Arc<AtomicMeasure>>,
    gamma: f64,
    r_inner: f64,
    t: f64,
    n_replicas: usize,
    seed: u64,
) -> Result<InequalityVerdict> {
    check_positive("t", t)?;
    let measure = measure.into();
    let inner_kernel = GreenKernel::SubDisk { radius: r_inner };
    inner_kernel.validate()?;
    let epsilon = default_epsilon(&measure, inner_kernel);
    let inner = build_covariance(Arc::clone(&measure), Some(epsilon), inner_kernel)?;
    let outer = build_covariance(measure, Some(epsilon), GreenKernel::Disk)?;

    let (a, b) = (inner.matrix(), outer.matrix());
    let scale = b.amax().max(a.amax());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let (x, y) = (a[(i, j)], b[(i, j)]);
            if x > y + ORDERING_TOL * scale {
                return Err(InequalityError::OrderingViolated {
                    check: InequalityKind::Kahane,
                    i,
                    j,
                    inner: x,
                    outer: y,
                }
                .into());
            }
        }
    }

    let pairs: Vec<(f64, f64)> = map_replicas_with(
        0,
        n_replicas,
        || (FieldScratch::new(inner.len()), FieldScratch::new(outer.len())),
        |(si, so), k| {
            sample_field_into(&inner, seed, k, si);
            sample_field_into(&outer, seed, k, so);
            let li = (-t * total_mass(&inner, &si.values, gamma)).exp();
            let lo = (-t * total_mass(&outer, &so.values, gamma)).exp();
            (li, lo)
        },
    );
    let (li, lo): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let diff: Vec<f64> = lo.iter().zip(&li).map(|(o, i)| o - i).collect();
    let est_inner = Estimate::from_samples(&li);
    let est_outer = Estimate::from_samples(&lo);
    let d = Estimate::from_samples(&diff);
    let mut v = InequalityVerdict::new(InequalityKind::Kahane, est_outer.mean - est_inner.mean, -3.0 * d.se)
        .monte_carlo(n_replicas, seed, vec![est_inner, est_outer]);
    v.radius = Some(r_inner);
    Ok(v)
}

/// Smallest eigenvalue of `G_𝔻 − G_{r𝔻}` per radius, against
/// `−1e−8 ·` the largest.
pub fn markov_psd_suite(measure: &AtomicMeasure, radii: &[f64]) -> Result<Vec<InequalityVerdict>> {
    radii
        .iter()
        .map(|&r| {
            let psd = markov_difference_psd(measure, r)?;
            let mut v = InequalityVerdict::new(
                InequalityKind::MarkovPsd,
                psd.min_eigenvalue,
                -MARKOV_PSD_TOL * psd.max_eigenvalue.max(0.0),
            );
            v.radius = Some(r);
            Ok(v)
        })
        .collect()
}
