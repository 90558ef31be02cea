//! Explicit negative-moment exponents and thresholds, and Monte Carlo
//! estimators that check them.

mod laplace;
mod tail;
mod verify;

pub use laplace::{laplace_from_masses, laplace_transform, LaplaceReport};
pub use tail::{small_ball_tail, TailReport};
pub use verify::{estimate_s0, verify_bound, BoundBranch, BoundVerdict, EventCheck, T_GRID_PER_DECADE};

use serde::Serialize;

use crate::measure::{d_energy, AtomicMeasure};
use crate::{Error, Result};

/// Exponents and thresholds of the negative-moment bound
/// `E[exp(−t μ(𝔻))] ≤ 2⁵ / (σ(𝔻) t^η)` for `t ≥ t₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub gamma: f64,
    pub d: f64,
    pub beta: f64,
    pub delta: f64,
    /// `max{√(2d) γ, d}`.
    pub beta_bar: f64,
    /// `(β − γ²) / (β + γ² δ)`.
    pub eta: f64,
    /// `(β + γ² δ) / (β − γ²)`, kept separately so `s₀^{1/η}` is exact for
    /// rational inputs.
    pub inv_eta: f64,
    /// `(1 + δ) / (β − γ²)`, the radius exponent `r = s^{−L}`.
    #[serde(rename = "L")]
    pub big_l: f64,
    pub s0: Option<f64>,
    /// `2⁴ s₀^{1/η}`.
    pub t0: Option<f64>,
    /// `(d − γ²) / (d + γ²)` when `γ < √d`.
    pub l2_eta: Option<f64>,
    pub l2_t0: Option<f64>,
}

impl ExponentReport {
    /// Records `s₀` and sets `t₀ = 16 s₀^{1/η}`.
    pub fn with_s0(mut self, s0: f64) -> Self {
        self.s0 = Some(s0);
        self.t0 = Some(16.0 * s0.powf(self.inv_eta));
        self
    }

    /// `2⁵ / (σ(𝔻) t^η)`.
    pub fn bound(&self, total_mass: f64, t: f64) -> f64 {
        32.0 / (total_mass * t.powf(self.eta))
    }
}

fn check_gamma_d(gamma: f64, d: f64) -> Result<()> {
    if !(d > 0.0 && d <= 2.0) {
        return Err(Error::Domain(format!("need 0 < d ≤ 2, got d = {d}")));
    }
    if !(gamma > 0.0 && gamma < (2.0 * d).sqrt()) {
        return Err(Error::Domain(format!("need 0 < γ < √(2d) = {}, got γ = {gamma}", (2.0 * d).sqrt())));
    }
    Ok(())
}

fn is_l2(gamma: f64, d: f64) -> bool {
    gamma * gamma < d
}

/// Formula fields of the report for a general `(γ, d, β, δ)`.
///
/// Admissible inputs satisfy `0 < d ≤ 2`, `0 < γ < √(2d)`, `δ > 0` and
/// `γ² < β < β̄`, or the `L²` choice `γ < √d, β = d, δ = 1`.
pub fn exponents(gamma: f64, d: f64, beta: f64, delta: f64) -> Result<ExponentReport> {
    check_gamma_d(gamma, d)?;
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("need δ > 0, got δ = {delta}")));
    }
    let g2 = gamma * gamma;
    let beta_bar = ((2.0 * d).sqrt() * gamma).max(d);
    let l2_choice = is_l2(gamma, d) && beta == d && delta == 1.0;
    if !l2_choice {
        if !(beta > g2) {
            return Err(Error::Domain(format!("need β > γ² = {g2}, got β = {beta}")));
        }
        if !(beta < beta_bar) {
            return Err(Error::Domain(format!("need β < β̄ = {beta_bar}, got β = {beta}")));
        }
    }
    let l2_eta = is_l2(gamma, d).then(|| (d - g2) / (d + g2));
    Ok(ExponentReport {
        gamma,
        d,
        beta,
        delta,
        beta_bar,
        eta: (beta - g2) / (beta + g2 * delta),
        inv_eta: (beta + g2 * delta) / (beta - g2),
        big_l: (1.0 + delta) / (beta - g2),
        s0: None,
        t0: None,
        l2_eta,
        l2_t0: None,
    })
}

/// The `L²` choice `β = d, δ = 1`, requiring `γ < √d`.
pub fn exponents_l2(gamma: f64, d: f64) -> Result<ExponentReport> {
    check_gamma_d(gamma, d)?;
    if !is_l2(gamma, d) {
        return Err(Error::Domain(format!("L² branch needs γ < √d = {}, got γ = {gamma}", d.sqrt())));
    }
    exponents(gamma, d, d, 1.0)
}

/// `s₀ = 2⁵ E_d(σ)/σ(𝔻)` for the `L²` branch.
pub fn l2_s0(energy_ratio: f64) -> f64 {
    32.0 * energy_ratio
}

/// `t₀ = 2⁴ (2⁵ ratio)^{1/η}` with `η = (d − γ²)/(d + γ²)` and
/// `ratio = E_d(σ)/σ(𝔻)`.
pub fn t0_l2_from_ratio(energy_ratio: f64, gamma: f64, d: f64) -> Result<f64> {
    let report = exponents_l2(gamma, d)?;
    if !(energy_ratio >= 0.0) {
        return Err(Error::Domain(format!("energy ratio must be nonnegative, got {energy_ratio}")));
    }
    Ok(report.with_s0(l2_s0(energy_ratio)).t0.expect("set by with_s0"))
}

/// [`t0_l2_from_ratio`] with the ratio computed from the measure's energy.
pub fn t0_l2(measure: &AtomicMeasure, gamma: f64, d: f64) -> Result<f64> {
    exponents_l2(gamma, d)?;
    t0_l2_from_ratio(d_energy(measure, d) / measure.total_mass(), gamma, d)
}
