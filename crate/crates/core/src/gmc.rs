//! Regularized GMC masses, the rooted (mass-biased) sampler, and the exact
//! discrete identities behind it.

use rand::Rng;
use serde::Serialize;

use crate::field::{replica_rng, sample_field, sample_field_into, FieldSample, FieldScratch, Substream};
use crate::kernel::{green_disk, CovarianceModel};
use crate::measure::Point;
use crate::stats::{map_replicas_with, Estimate};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmcSample {
    /// `w_i · exp(γ h_i − γ²/2 · Var h_i)`.
    pub per_atom_mass: Vec<f64>,
    pub total_mass: f64,
    pub gamma: f64,
}

/// Mass of atom `i` for field value `value`.
#[inline]
fn atom_mass(weight: f64, value: f64, variance: f64, gamma: f64) -> f64 {
    weight * (gamma * value - 0.5 * gamma * gamma * variance).exp()
}

/// GMC masses of a field sample. Each atom has mean mass `w_i` exactly,
/// since the normalization uses the variance of the sampled field.
pub fn gmc_mass(model: &CovarianceModel, field: &FieldSample, gamma: f64) -> GmcSample {
    let per_atom_mass = masses(model, &field.values, gamma);
    let total_mass = per_atom_mass.iter().sum();
    GmcSample { per_atom_mass, total_mass, gamma }
}

pub(crate) fn masses(model: &CovarianceModel, values: &[f64], gamma: f64) -> Vec<f64> {
    assert!(gamma >= 0.0, "gamma must be nonnegative");
    model
        .measure()
        .weights()
        .zip(values)
        .zip(model.diag_variance())
        .map(|((w, &h), &v)| atom_mass(w, h, v, gamma))
        .collect()
}

/// Total GMC mass without materializing the per-atom vector.
pub fn total_mass(model: &CovarianceModel, values: &[f64], gamma: f64) -> f64 {
    model
        .measure()
        .weights()
        .zip(values)
        .zip(model.diag_variance())
        .map(|((w, &h), &v)| atom_mass(w, h, v, gamma))
        .sum()
}

/// Total masses of replicas `first..first + n`, in replica order.
pub fn total_masses(model: &CovarianceModel, gamma: f64, base_seed: u64, first: u64, n: usize) -> Vec<f64> {
    assert!(gamma >= 0.0, "gamma must be nonnegative");
    map_replicas_with(
        first,
        n,
        || FieldScratch::new(model.len()),
        |scratch, k| {
            sample_field_into(model, base_seed, k, scratch);
            total_mass(model, &scratch.values, gamma)
        },
    )
}

/// Atom index drawn with probability `w_i / σ(𝔻)` from the replica's root
/// sub-stream.
pub fn draw_root(model: &CovarianceModel, base_seed: u64, replica_index: u64) -> usize {
    let measure = model.measure();
    let mut rng = replica_rng(base_seed, replica_index, Substream::Root);
    let u = rng.random::<f64>() * measure.total_mass();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in measure.weights().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// An unbiased field plus a `γ'`-weighted log-singularity at a random atom.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootedSample {
    pub root: Point,
    pub root_index: usize,
    pub gamma_prime: f64,
    /// The unbiased field `ĥ`.
    pub unbiased: FieldSample,
    /// `ĥ + γ' K_ε(x̄, ·)`.
    pub shifted_field: Vec<f64>,
}

/// Draws the root from sub-stream 0 and `ĥ` from sub-stream 1 of the
/// replica; `ĥ` is the same vector [`sample_field`] returns.
pub fn sample_rooted(model: &CovarianceModel, base_seed: u64, replica_index: u64, gamma_prime: f64) -> RootedSample {
    assert!(gamma_prime >= 0.0, "gamma' must be nonnegative");
    let root_index = draw_root(model, base_seed, replica_index);
    let unbiased = sample_field(model, base_seed, replica_index);
    let shifted_field = unbiased.values.iter().zip(model.row(root_index)).map(|(h, k)| h + gamma_prime * k).collect();
    RootedSample {
        root: model.measure().atoms()[root_index].position,
        root_index,
        gamma_prime,
        unbiased,
        shifted_field,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootedIdentity {
    /// `Σ_i exp(γγ' K_ε(x̄, p_i)) μ̂_i`.
    pub lhs: f64,
    /// Total GMC mass of the shifted field.
    pub rhs: f64,
    pub rel_err: f64,
}

/// Both sides of the rooted identity for one replica. They agree up to
/// floating-point rounding because the shift uses the same regularized
/// kernel as the field.
pub fn verify_rooted_identity(
    model: &CovarianceModel,
    base_seed: u64,
    replica_index: u64,
    gamma: f64,
    gamma_prime: f64,
) -> RootedIdentity {
    let rooted = sample_rooted(model, base_seed, replica_index, gamma_prime);
    let unbiased = masses(model, &rooted.unbiased.values, gamma);
    let lhs: f64 =
        unbiased.iter().zip(model.row(rooted.root_index)).map(|(m, k)| (gamma * gamma_prime * k).exp() * m).sum();
    let rhs = total_mass(model, &rooted.shifted_field, gamma);
    RootedIdentity { lhs, rhs, rel_err: (lhs - rhs).abs() / rhs.abs() }
}

/// Functional `F` of the field compared under both sides of the change of
/// measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestStatistic {
    /// `F ≡ 1`.
    One,
    /// `F(h) = h(p_atom)`.
    FieldAt { atom: usize },
    /// `F(h) = min(μ_{γh}(𝔻), cap)`.
    ClippedMass { gamma: f64, cap: f64 },
}

impl TestStatistic {
    pub fn evaluate(&self, model: &CovarianceModel, values: &[f64]) -> f64 {
        match *self {
            TestStatistic::One => 1.0,
            TestStatistic::FieldAt { atom } => values[atom],
            TestStatistic::ClippedMass { gamma, cap } => total_mass(model, values, gamma).min(cap),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChangeOfMeasureReport {
    pub statistic: TestStatistic,
    pub gamma_prime: f64,
    pub replicas: usize,
    pub seed: u64,
    /// `E[F(h) μ_{γ'h}(𝔻)] / σ(𝔻)` over unbiased fields.
    pub weighted: Estimate,
    /// `E[F(ĥ + γ' K_ε(x̄, ·))]` over rooted samples.
    pub shifted: Estimate,
    pub combined_se: f64,
    /// `|weighted − shifted| ≤ 3 · combined_se`.
    pub consistent: bool,
}

/// Monte Carlo comparison of the mass-weighted law with the rooted law.
///
/// The weighted side uses replicas `0..n`, the rooted side `n..2n`, so the
/// two estimates are independent.
pub fn verify_change_of_measure(
    model: &CovarianceModel,
    gamma_prime: f64,
    statistic: TestStatistic,
    n_replicas: usize,
    seed: u64,
) -> ChangeOfMeasureReport {
    if let TestStatistic::FieldAt { atom } = statistic {
        assert!(atom < model.len(), "atom index out of range");
    }
    let sigma = model.measure().total_mass();
    let weighted: Vec<f64> = map_replicas_with(
        0,
        n_replicas,
        || FieldScratch::new(model.len()),
        |scratch, k| {
            sample_field_into(model, seed, k, scratch);
            let f = statistic.evaluate(model, &scratch.values);
            f * total_mass(model, &scratch.values, gamma_prime) / sigma
        },
    );
    let shifted: Vec<f64> = map_replicas_with(
        n_replicas as u64,
        n_replicas,
        || (),
        |_, k| {
            let rooted = sample_rooted(model, seed, k, gamma_prime);
            statistic.evaluate(model, &rooted.shifted_field)
        },
    );
    let weighted = Estimate::from_samples(&weighted);
    let shifted = Estimate::from_samples(&shifted);
    let combined_se = weighted.se.hypot(shifted.se);
    ChangeOfMeasureReport {
        statistic,
        gamma_prime,
        replicas: n_replicas,
        seed,
        weighted,
        shifted,
        combined_se,
        consistent: (weighted.mean - shifted.mean).abs() <= 3.0 * combined_se,
    }
}

/// `Σ_{i ≠ root} exp(β G_𝔻(x̄, p_i)) μ̂_i` for the rooted replica, with the
/// singular (unregularized) Green's function.
pub fn beta_singular_integral(
    model: &CovarianceModel,
    base_seed: u64,
    replica_index: u64,
    gamma: f64,
    beta: f64,
) -> f64 {
    assert!(beta >= 0.0, "beta must be nonnegative");
    let root_index = draw_root(model, base_seed, replica_index);
    let field = sample_field(model, base_seed, replica_index);
    let mu = masses(model, &field.values, gamma);
    let root = model.measure().atoms()[root_index].position;
    model
        .measure()
        .positions()
        .zip(&mu)
        .enumerate()
        .filter(|&(i, _)| i != root_index)
        .map(|(_, (p, m))| {
            let g = green_disk(root, p).expect("distinct atoms");
            (beta * g).exp() * m
        })
        .sum()
}
