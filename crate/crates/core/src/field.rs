//! Seeded Gaussian vectors with the covariance of a [`CovarianceModel`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::kernel::CovarianceModel;

/// Independent random sub-streams of one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Substream {
    /// Root point of a rooted sample.
    Root = 0,
    /// Standard normal vector driving the field.
    Gaussian = 1,
}

/// The generator for `(base_seed, replica_index, substream)`.
///
/// The ChaCha key holds the seed and sub-stream id and the replica index is
/// the ChaCha stream number, so every replica is addressable without
/// generating its predecessors.
pub fn replica_rng(base_seed: u64, replica_index: u64, substream: Substream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(substream as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica_index);
    rng
}

/// Fills `z` with the standard normal vector of a replica.
pub fn standard_normals(base_seed: u64, replica_index: u64, z: &mut [f64]) {
    let mut rng = replica_rng(base_seed, replica_index, Substream::Gaussian);
    for v in z.iter_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub replica_index: u64,
    pub base_seed: u64,
}

/// `values = L z` with `z` standard normal from the replica's stream.
pub fn sample_field(model: &CovarianceModel, base_seed: u64, replica_index: u64) -> FieldSample {
    let mut scratch = FieldScratch::new(model.len());
    sample_field_into(model, base_seed, replica_index, &mut scratch);
    FieldSample { values: scratch.values, replica_index, base_seed }
}

/// Reusable buffers for the allocation-free sampling path.
#[derive(Clone, Debug)]
pub struct FieldScratch {
    pub normals: Vec<f64>,
    pub values: Vec<f64>,
}

impl FieldScratch {
    pub fn new(n: usize) -> Self {
        Self { normals: vec![0.0; n], values: vec![0.0; n] }
    }
}

/// Same draw as [`sample_field`], written into `scratch.values`.
pub fn sample_field_into(model: &CovarianceModel, base_seed: u64, replica_index: u64, scratch: &mut FieldScratch) {
    let n = model.len();
    scratch.normals.resize(n, 0.0);
    scratch.values.resize(n, 0.0);
    standard_normals(base_seed, replica_index, &mut scratch.normals);
    model.factor().mul_vec(&scratch.normals, &mut scratch.values);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{build_covariance, GreenKernel};
    use crate::measure::{Atom, AtomicMeasure};
    use crate::stats::{map_replicas, Estimate};

    fn single(eps: f64) -> CovarianceModel {
        let m = AtomicMeasure::new(vec![Atom::new(0.0, 0.0, 1.0)]).unwrap();
        build_covariance(m, Some(eps), GreenKernel::Disk).unwrap()
    }

    #[test]
    fn reproducible() {
        let m = AtomicMeasure::new(vec![Atom::new(0.1, 0.0, 0.5), Atom::new(-0.2, 0.3, 0.5)]).unwrap();
        let model = build_covariance(m, None, GreenKernel::Disk).unwrap();
        let a = sample_field(&model, 42, 17);
        let b = sample_field(&model, 42, 17);
        assert_eq!(a, b);
        assert_ne!(a.values, sample_field(&model, 42, 18).values);
        assert_ne!(a.values, sample_field(&model, 43, 17).values);
        assert_eq!(a.values.len(), 2);
    }

    #[test]
    fn single_atom_variance() {
        let model = single(0.01);
        let v = model.diag_variance()[0];
        let n = 100_000;
        let sq: Vec<f64> = map_replicas(0, n, |k| sample_field(&model, 5, k).values[0].powi(2));
        let var = Estimate::from_samples(&sq).mean;
        assert!((var - v).abs() < 0.05 * v, "{var} vs {v}");
    }

    #[test]
    fn two_atom_covariance_within_three_se() {
        let m = AtomicMeasure::new(vec![Atom::new(0.2, 0.0, 0.5), Atom::new(-0.1, 0.25, 0.5)]).unwrap();
        let model = build_covariance(m, None, GreenKernel::Disk).unwrap();
        let n = 100_000;
        let draws: Vec<Vec<f64>> = map_replicas(0, n, |k| sample_field(&model, 9, k).values);
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let prods: Vec<f64> = draws.iter().map(|v| v[i] * v[j]).collect();
            let e = Estimate::from_samples(&prods);
            assert!(e.within(model.matrix()[(i, j)], 3.0), "({i},{j}) {e:?} vs {}", model.matrix()[(i, j)]);
        }
    }

    #[test]
    fn distinct_replicas_uncorrelated() {
        let model = single(0.1);
        let n = 100_000;
        let a: Vec<f64> = map_replicas(0, n, |k| sample_field(&model, 1, 2 * k).values[0]);
        let b: Vec<f64> = map_replicas(0, n, |k| sample_field(&model, 1, 2 * k + 1).values[0]);
        let cov = crate::stats::covariance(&a, &b).mean;
        let sd = |x: &[f64]| crate::stats::covariance(x, x).mean.sqrt();
        let corr = cov / (sd(&a) * sd(&b));
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn scaling_the_kernel_scales_values() {
        // kernel scaled by c² ⇔ epsilon chosen so the 1×1 variance is c² v
        let base = single(0.1);
        let v = base.diag_variance()[0];
        let c = 1.5f64;
        let scaled = single((-(c * c * v)).exp());
        for k in 0..20 {
            let a = sample_field(&base, 3, k).values[0];
            let b = sample_field(&scaled, 3, k).values[0];
            assert!((b - c * a).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }
}
