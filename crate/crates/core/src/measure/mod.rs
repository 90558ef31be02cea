//! Finite atomic base measures in the unit disk.

mod energy;
mod generate;
mod io;
mod split;

pub use energy::{d_energy, local_energy};
pub use generate::{generate_cantor_dust, generate_julia_boundary, generate_uniform_grid};
pub use io::{load_measure, read_measure, save_measure, write_measure};
pub use split::{split_half_plane, SplitResult};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// A point of the complex plane.
pub type Point = Complex64;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("atom {index} at ({x}, {y}) lies outside the open unit disk")]
    OutsideDisk { index: usize, x: f64, y: f64 },
    #[error("atom {index} has invalid weight {weight}")]
    InvalidWeight { index: usize, weight: f64 },
    #[error("atoms {first} and {second} share the position ({x}, {y})")]
    DuplicatePosition { first: usize, second: usize, x: f64, y: f64 },
    #[error("measure has no atoms or zero total mass")]
    Empty,
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("no half-plane split exists: {0}")]
    SplitInfeasible(String),
    #[error("measure file: {0}")]
    Io(#[from] std::io::Error),
    #[error("measure file: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub position: Point,
    pub weight: f64,
}

impl Atom {
    pub fn new(x: f64, y: f64, weight: f64) -> Self {
        Self { position: Point::new(x, y), weight }
    }
}

/// A validated finite measure `Σ w_i δ_{p_i}` with compact support in the
/// open unit disk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
    support_radius: f64,
    total_mass: f64,
}

impl AtomicMeasure {
    /// Validates positions (strictly inside the unit disk, pairwise distinct)
    /// and weights (finite, nonnegative, positive total).
    pub fn new(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let mut support_radius = 0.0f64;
        for (index, a) in atoms.iter().enumerate() {
            let (x, y) = (a.position.re, a.position.im);
            let r = a.position.norm();
            if !x.is_finite() || !y.is_finite() || r >= 1.0 {
                return Err(MeasureError::OutsideDisk { index, x, y });
            }
            if !a.weight.is_finite() || a.weight < 0.0 {
                return Err(MeasureError::InvalidWeight { index, weight: a.weight });
            }
            support_radius = support_radius.max(r);
        }
        check_distinct(&atoms)?;
        let total_mass: f64 = atoms.iter().map(|a| a.weight).sum();
        if total_mass <= 0.0 {
            return Err(MeasureError::Empty);
        }
        Ok(Self { atoms, support_radius, total_mass })
    }

    /// Equal weights summing to one.
    pub fn uniform(positions: Vec<Point>) -> Result<Self, MeasureError> {
        let w = 1.0 / positions.len().max(1) as f64;
        Self::new(positions.into_iter().map(|position| Atom { position, weight: w }).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Largest `|p|` over the atoms.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = Point> + '_ {
        self.atoms.iter().map(|a| a.position)
    }

    pub fn weights(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.weight)
    }

    /// Same atoms with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self, MeasureError> {
        Self::new(self.atoms.iter().map(|a| Atom { weight: c * a.weight, ..*a }).collect())
    }

    /// Smallest distance between two distinct atoms, `None` for one atom.
    pub fn min_pair_distance(&self) -> Option<f64> {
        let n = self.atoms.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (self.atoms[i].position - self.atoms[j].position).norm();
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }
}

fn check_distinct(atoms: &[Atom]) -> Result<(), MeasureError> {
    // +0.0 and -0.0 compare equal as positions
    let key = |p: Point| ((p.re + 0.0).to_bits(), (p.im + 0.0).to_bits());
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by_key(|&i| key(atoms[i].position));
    for pair in order.windows(2) {
        let (a, b) = (atoms[pair[0]].position, atoms[pair[1]].position);
        if key(a) == key(b) {
            let (first, second) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            return Err(MeasureError::DuplicatePosition { first, second, x: a.re, y: a.im });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_atoms() {
        assert!(matches!(
            AtomicMeasure::new(vec![Atom::new(1.0, 0.0, 1.0)]),
            Err(MeasureError::OutsideDisk { index: 0, .. })
        ));
        assert!(matches!(
            AtomicMeasure::new(vec![Atom::new(0.1, 0.0, 1.0), Atom::new(0.2, 0.0, -1.0)]),
            Err(MeasureError::InvalidWeight { index: 1, .. })
        ));
        assert!(matches!(
            AtomicMeasure::new(vec![Atom::new(0.0, 0.0, 1.0), Atom::new(-0.0, 0.0, 1.0)]),
            Err(MeasureError::DuplicatePosition { first: 0, second: 1, .. })
        ));
        assert!(matches!(AtomicMeasure::new(vec![]), Err(MeasureError::Empty)));
        assert!(matches!(AtomicMeasure::new(vec![Atom::new(0.0, 0.0, 0.0)]), Err(MeasureError::Empty)));
    }

    #[test]
    fn support_radius_and_mass() {
        let m = AtomicMeasure::new(vec![Atom::new(0.3, 0.4, 0.25), Atom::new(0.0, -0.1, 0.75)]).unwrap();
        assert_eq!(m.total_mass(), 1.0);
        assert!((m.support_radius() - 0.5).abs() < 1e-15);
        assert!((m.min_pair_distance().unwrap() - (0.09f64 + 0.25).sqrt()).abs() < 1e-15);
    }
}
