use rayon::prelude::*;

use super::{AtomicMeasure, Point};

/// Off-diagonal `d`-energy `Σ_{i≠j} w_i w_j |p_i − p_j|^{-d}`.
///
/// Both orderings of each pair are counted, as in the double integral.
/// Diagonal terms are dropped: they are infinite for atoms and carry no mass
/// in the continuum limit, so this is an estimator of the continuum energy.
pub fn d_energy(measure: &AtomicMeasure, d: f64) -> f64 {
    assert!(d > 0.0, "energy exponent must be positive");
    let atoms = measure.atoms();
    let rows: Vec<f64> = atoms
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let row: f64 = atoms
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| b.weight * (a.position - b.position).norm().powf(-d))
                .sum();
            a.weight * row
        })
        .collect();
    rows.iter().sum()
}

/// Local energy `Σ_i m_i |root − p_i|^{-β}` of the masses `m` carried by the
/// atoms of `measure`. Atoms sitting exactly at `root` are skipped.
pub fn local_energy(measure: &AtomicMeasure, root: Point, masses: &[f64], beta: f64) -> f64 {
    assert!(beta > 0.0, "local energy exponent must be positive");
    assert_eq!(masses.len(), measure.len());
    measure.positions().zip(masses).filter(|(p, _)| *p != root).map(|(p, m)| m * (root - p).norm().powf(-beta)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{generate_cantor_dust, generate_uniform_grid, Atom};
    use proptest::prelude::*;

    /// Plain double loop over ordered pairs.
    fn brute_energy(m: &AtomicMeasure, d: f64) -> f64 {
        let a = m.atoms();
        let mut s = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                if i != j {
                    let dx = a[i].position.re - a[j].position.re;
                    let dy = a[i].position.im - a[j].position.im;
                    s += a[i].weight * a[j].weight / (dx * dx + dy * dy).sqrt().powf(d);
                }
            }
        }
        s
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn two_atoms_and_one() {
        let m = AtomicMeasure::new(vec![Atom::new(0.0, 0.0, 0.5), Atom::new(0.5, 0.0, 0.5)]).unwrap();
        assert!((d_energy(&m, 1.0) - 1.0).abs() < 1e-15);
        let one = AtomicMeasure::new(vec![Atom::new(0.2, 0.1, 3.0)]).unwrap();
        assert_eq!(d_energy(&one, 1.5), 0.0);
    }

    #[test]
    fn matches_brute_force() {
        let grid = generate_uniform_grid(16, 0.8).unwrap();
        assert!(rel(d_energy(&grid, 1.0), brute_energy(&grid, 1.0)) < 1e-12);
        let dust = generate_cantor_dust(3, 0.7).unwrap();
        let e = d_energy(&dust, 0.9);
        assert!(e.is_finite() && e > 0.0);
        assert!(rel(e, brute_energy(&dust, 0.9)) < 1e-12);
    }

    #[test]
    fn local_energy_cases() {
        let m = AtomicMeasure::new(vec![Atom::new(0.5, 0.0, 1.0)]).unwrap();
        let root = Point::new(0.0, 0.0);
        assert!((local_energy(&m, root, &[0.7], 1.0) - 1.4).abs() < 1e-15);
        assert_eq!(local_energy(&m, Point::new(0.5, 0.0), &[0.7], 1.0), 0.0);

        // with unit field the masses are the weights
        let grid = generate_uniform_grid(6, 0.5).unwrap();
        let w: Vec<f64> = grid.weights().collect();
        let root = grid.atoms()[7].position;
        let brute: f64 = grid
            .atoms()
            .iter()
            .filter(|a| a.position != root)
            .map(|a| a.weight / (a.position - root).norm().powf(1.3))
            .sum();
        assert!(rel(local_energy(&grid, root, &w, 1.3), brute) < 1e-13);
    }

    fn small_measure() -> impl Strategy<Value = AtomicMeasure> {
        proptest::collection::vec((-0.35f64..0.35, -0.35f64..0.35, 0.01f64..1.0), 2..25)
            .prop_filter_map("valid measure", |pts| {
                AtomicMeasure::new(pts.into_iter().map(|(x, y, w)| Atom::new(x, y, w)).collect()).ok()
            })
    }

    proptest! {
        #[test]
        fn energy_nondecreasing_in_d(m in small_measure(), d in 0.1f64..1.9, dd in 0.0f64..0.5) {
            prop_assert!(m.support_radius() <= 0.5);
            prop_assert!(d_energy(&m, d) <= d_energy(&m, d + dd) * (1.0 + 1e-12));
        }

        #[test]
        fn energy_quadratic_in_weights(m in small_measure(), c in 0.1f64..10.0, d in 0.2f64..2.0) {
            let scaled = m.scaled(c).unwrap();
            prop_assert!(rel(d_energy(&scaled, d), c * c * d_energy(&m, d)) < 1e-12);
        }

        #[test]
        fn local_energy_monotone_in_beta(m in small_measure(), b in 0.1f64..1.5, db in 0.0f64..0.5, k in 0usize..25) {
            let root = m.atoms()[k % m.len()].position;
            let w: Vec<f64> = m.weights().collect();
            prop_assert!(local_energy(&m, root, &w, b) <= local_energy(&m, root, &w, b + db) * (1.0 + 1e-12));
        }
    }
}
