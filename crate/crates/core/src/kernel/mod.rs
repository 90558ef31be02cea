//! Zero-boundary Green's functions of the unit disk and of concentric
//! sub-disks, and the regularized covariance model built from them.

mod covariance;
mod factor;
mod markov;

pub use covariance::{
    build_covariance, default_epsilon, repair_psd, CovarianceDiagnostics, CovarianceModel, PsdRepair,
};
pub use factor::LowerFactor;
pub use markov::{markov_difference_matrix, markov_difference_psd, MarkovPsd, MARKOV_PSD_TOL};

use serde::Serialize;
use thiserror::Error;

use crate::measure::Point;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("Green's function is singular on the diagonal (x = y = {0})")]
    Singular(Point),
    #[error("regularization scale {0} not in (0, 1)")]
    InvalidEpsilon(f64),
    #[error("sub-disk radius {0} not in (0, 1]")]
    InvalidRadius(f64),
    #[error("atom {index} at distance {distance} from the origin is outside the disk of radius {radius}")]
    OutsideDomain { index: usize, distance: f64, radius: f64 },
    #[error(
        "factorization failed after PSD repair: {reason} \
         (n = {n}, clip magnitude {clip_magnitude:e}, max eigenvalue {max_eigenvalue:e})"
    )]
    Factorization { reason: String, n: usize, clip_magnitude: f64, max_eigenvalue: f64 },
}

/// `log|1 − x ȳ| − log|x − y|`, and 0 when either point is outside the open
/// unit disk.
pub fn green_disk(x: Point, y: Point) -> Result<f64, KernelError> {
    green_subdisk(x, y, 1.0)
}

/// Green's function of the disk of radius `r` centred at the origin:
/// `log|r² − x ȳ| − log(r |x − y|)` inside, 0 outside.
pub fn green_subdisk(x: Point, y: Point, r: f64) -> Result<f64, KernelError> {
    if x == y {
        return Err(KernelError::Singular(x));
    }
    if x.norm() >= r || y.norm() >= r {
        return Ok(0.0);
    }
    Ok((r * r - x * y.conj()).norm().ln() - (r * (x - y).norm()).ln())
}

/// The domain whose zero-boundary Green's function drives the field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum GreenKernel {
    /// The unit disk.
    Disk,
    /// The disk of the given radius `r ∈ (0, 1]` centred at the origin.
    SubDisk { radius: f64 },
}

impl GreenKernel {
    pub fn radius(&self) -> f64 {
        match *self {
            GreenKernel::Disk => 1.0,
            GreenKernel::SubDisk { radius } => radius,
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let r = self.radius();
        if r > 0.0 && r <= 1.0 {
            Ok(())
        } else {
            Err(KernelError::InvalidRadius(r))
        }
    }

    pub fn green(&self, x: Point, y: Point) -> Result<f64, KernelError> {
        green_subdisk(x, y, self.radius())
    }

    /// Green's function with the log-singularity truncated at distance
    /// `epsilon`: `log|r² − x ȳ| − log(r · max(ε, |x − y|))` inside the
    /// domain, 0 outside.
    pub fn regularized(&self, x: Point, y: Point, epsilon: f64) -> f64 {
        let r = self.radius();
        if x.norm() >= r || y.norm() >= r {
            return 0.0;
        }
        (r * r - x * y.conj()).norm().ln() - (r * epsilon.max((x - y).norm())).ln()
    }
}

/// Unit-disk entry of the regularized covariance. On the diagonal this is
/// `log(1/ε) + log(1 − |x|²)`, the variance of the circle average of radius
/// `ε`; off the diagonal it is the Green's function once `|x − y| ≥ ε`.
pub fn regularized_entry(x: Point, y: Point, epsilon: f64) -> f64 {
    GreenKernel::Disk.regularized(x, y, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn green_disk_values() {
        assert!((green_disk(p(0.0, 0.0), p(0.5, 0.0)).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(green_disk(p(0.5, 0.0), p(1.2, 0.0)).unwrap(), 0.0);
        // log(sqrt(1.0625) / (0.5 sqrt 2)), evaluated independently
        assert!((green_disk(p(0.5, 0.0), p(0.0, 0.5)).unwrap() - 0.37688590118819004).abs() < 1e-14);
        assert!(matches!(green_disk(p(0.1, 0.1), p(0.1, 0.1)), Err(KernelError::Singular(_))));
    }

    #[test]
    fn green_subdisk_values() {
        let (x, y) = (p(0.3, -0.2), p(-0.1, 0.4));
        assert_eq!(green_subdisk(x, y, 1.0).unwrap(), green_disk(x, y).unwrap());
        assert!((green_subdisk(p(0.0, 0.0), p(0.25, 0.0), 0.5).unwrap() - LN_2).abs() < 1e-15);
        assert_eq!(green_subdisk(p(0.1, 0.0), p(0.6, 0.0), 0.5).unwrap(), 0.0);
        assert!(matches!(green_subdisk(x, x, 0.5), Err(KernelError::Singular(_))));
    }

    #[test]
    fn regularized_values() {
        let o = p(0.0, 0.0);
        assert!((regularized_entry(o, o, 0.01) - 4.605170185988092).abs() < 1e-14);
        let h = p(0.5, 0.0);
        assert!((regularized_entry(h, h, 0.01) - 4.317488113536311).abs() < 1e-14);
        let (x, y) = (p(0.1, 0.2), p(0.1, -0.3));
        assert_eq!(regularized_entry(x, y, 0.01), green_disk(x, y).unwrap());
    }

    fn disk_point(r: f64) -> impl Strategy<Value = Point> {
        (0.0f64..r, 0.0f64..std::f64::consts::TAU).prop_map(|(rho, t)| Point::from_polar(rho, t))
    }

    proptest! {
        #[test]
        fn symmetric(x in disk_point(0.99), y in disk_point(0.99)) {
            prop_assume!(x != y);
            prop_assert_eq!(green_disk(x, y).unwrap(), green_disk(y, x).unwrap());
        }

        #[test]
        fn domain_monotone(x in disk_point(0.99), y in disk_point(0.99), r in 0.05f64..1.0, dr in 0.0f64..1.0) {
            prop_assume!(x != y);
            let r2 = r + (1.0 - r) * dr;
            let small = green_subdisk(x, y, r).unwrap();
            let large = green_subdisk(x, y, r2).unwrap();
            let full = green_disk(x, y).unwrap();
            prop_assert!(small <= large + 1e-12);
            prop_assert!(large <= full + 1e-12);
        }

        #[test]
        fn bounded_by_log_distance(x in disk_point(0.999), y in disk_point(0.999)) {
            prop_assume!(x != y);
            let g = green_disk(x, y).unwrap();
            prop_assert!(g <= LN_2 + (x - y).norm().ln().abs() + 1e-12);
        }

        #[test]
        fn regularized_nonincreasing_in_epsilon(x in disk_point(0.9), y in disk_point(0.9), e in 0.001f64..0.5, de in 0.0f64..0.4) {
            prop_assert!(regularized_entry(x, y, e + de) <= regularized_entry(x, y, e));
        }
    }
}
