use serde::Serialize;

use super::ExponentReport;
use crate::gmc::total_masses;
use crate::kernel::CovarianceModel;
use crate::stats::Estimate;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaplaceReport {
    pub gamma: f64,
    pub t_values: Vec<f64>,
    /// Mean of `exp(−t μ(𝔻))` over the replicas, per `t`.
    pub estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// `2⁵ / (σ(𝔻) t^η)` per `t`, when exponents were supplied.
    pub bound_values: Option<Vec<f64>>,
    pub replicas: usize,
    pub seed: u64,
}

impl LaplaceReport {
    /// Rows `(t, estimate, stderr, bound)` for plotting.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, Option<f64>)> + '_ {
        (0..self.t_values.len()).map(|k| {
            (self.t_values[k], self.estimates[k], self.standard_errors[k], self.bound_values.as_ref().map(|b| b[k]))
        })
    }
}

/// Laplace-transform estimates for every `t` from one shared set of total
/// masses, so the estimates are pathwise nonincreasing in `t`.
pub fn laplace_from_masses(
    masses: &[f64],
    t_values: &[f64],
    total_mass: f64,
    exponents: Option<&ExponentReport>,
) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
    let mut estimates = Vec::with_capacity(t_values.len());
    let mut errors = Vec::with_capacity(t_values.len());
    let mut buf = vec![0.0; masses.len()];
    for &t in t_values {
        assert!(t >= 0.0, "Laplace parameter must be nonnegative");
        for (b, m) in buf.iter_mut().zip(masses) {
            *b = (-t * m).exp();
        }
        let e = Estimate::from_samples(&buf);
        estimates.push(e.mean);
        errors.push(e.se);
    }
    let bounds = exponents.map(|x| t_values.iter().map(|&t| x.bound(total_mass, t)).collect());
    (estimates, errors, bounds)
}

/// Estimates `E[exp(−t μ_γ(𝔻))]` on replicas `0..n_replicas`.
pub fn laplace_transform(
    model: &CovarianceModel,
    gamma: f64,
    t_values: &[f64],
    n_replicas: usize,
    seed: u64,
    exponents: Option<&ExponentReport>,
) -> LaplaceReport {
    let masses = total_masses(model, gamma, seed, 0, n_replicas);
    let (estimates, standard_errors, bound_values) =
        laplace_from_masses(&masses, t_values, model.measure().total_mass(), exponents);
    LaplaceReport {
        gamma,
        t_values: t_values.to_vec(),
        estimates,
        standard_errors,
        bound_values,
        replicas: n_replicas,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_covariance, GreenKernel};
    use crate::measure::{generate_uniform_grid, Atom, AtomicMeasure};

    fn grid() -> CovarianceModel {
        build_covariance(generate_uniform_grid(6, 0.8).unwrap(), None, GreenKernel::Disk).unwrap()
    }

    #[test]
    fn t_zero_is_one() {
        let r = laplace_transform(&grid(), 0.8, &[0.0], 500, 1, None);
        assert_eq!(r.estimates, vec![1.0]);
        assert_eq!(r.standard_errors, vec![0.0]);
    }

    #[test]
    fn gamma_zero_is_deterministic() {
        let m = AtomicMeasure::new(vec![Atom::new(0.1, 0.0, 0.3), Atom::new(-0.2, 0.2, 0.45)]).unwrap();
        let model = build_covariance(m, None, GreenKernel::Disk).unwrap();
        let sigma = model.measure().total_mass();
        let ts = [0.5, 1.0, 7.0];
        let r = laplace_transform(&model, 0.0, &ts, 300, 1, None);
        for (k, t) in ts.iter().enumerate() {
            assert_eq!(r.estimates[k], (-t * sigma).exp());
            assert_eq!(r.standard_errors[k], 0.0);
        }
    }

    #[test]
    fn estimates_monotone_and_bounded() {
        let ts: Vec<f64> = (0..30).map(|k| 0.1 * 1.4f64.powi(k)).collect();
        let r = laplace_transform(&grid(), 1.2, &ts, 3000, 4, None);
        assert!(r.estimates.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.estimates.iter().all(|&e| (0.0..=1.0).contains(&e)));
    }

    #[test]
    fn bounds_attached() {
        let x = crate::bounds::exponents_l2(0.8, 2.0).unwrap();
        let model = grid();
        let sigma = model.measure().total_mass();
        let r = laplace_transform(&model, 0.8, &[10.0, 100.0], 100, 4, Some(&x));
        let b = r.bound_values.unwrap();
        assert_eq!(b[0], 32.0 / (sigma * 10f64.powf(x.eta)));
    }
}
