use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{green_disk, green_subdisk, KernelError};
use crate::measure::AtomicMeasure;

/// Relative eigenvalue floor for declaring a difference kernel PSD.
pub const MARKOV_PSD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkovPsd {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub psd: bool,
}

/// `G_𝔻 − G_{r𝔻}` over the atoms, i.e. the covariance of the harmonic part
/// of the field seen from the disk of radius `r`. The diagonal uses the
/// continuous limit `log(1 − |p|²) − log((r² − |p|²)/r)`.
pub fn markov_difference_matrix(measure: &AtomicMeasure, r: f64) -> Result<DMatrix<f64>, KernelError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(KernelError::InvalidRadius(r));
    }
    let pts: Vec<_> = measure.positions().collect();
    if let Some((index, p)) = pts.iter().enumerate().find(|(_, p)| p.norm() >= r) {
        return Err(KernelError::OutsideDomain { index, distance: p.norm(), radius: r });
    }
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let s = pts[i].norm_sqr();
        m[(i, i)] = (1.0 - s).ln() - ((r * r - s) / r).ln();
        for j in 0..i {
            let v = green_disk(pts[i], pts[j])? - green_subdisk(pts[i], pts[j], r)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Smallest and largest eigenvalue of [`markov_difference_matrix`]; `psd`
/// when the smallest is at least `−1e−8 ·` the largest.
pub fn markov_difference_psd(measure: &AtomicMeasure, r: f64) -> Result<MarkovPsd, KernelError> {
    let m = markov_difference_matrix(measure, r)?;
    let eig = SymmetricEigen::new(m).eigenvalues;
    let min_eigenvalue = eig.min();
    let max_eigenvalue = eig.max();
    Ok(MarkovPsd { min_eigenvalue, max_eigenvalue, psd: min_eigenvalue >= -MARKOV_PSD_TOL * max_eigenvalue.max(0.0) })
}
