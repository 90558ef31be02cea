use std::f64::consts::FRAC_1_SQRT_2;

use super::{AtomicMeasure, MeasureError, Point};

/// Deepest Cantor dust iterate accepted (4^8 = 65 536 atoms).
pub const MAX_CANTOR_LEVEL: u32 = 8;
pub const MAX_JULIA_PIXELS: usize = 2048;

fn check_radius(radius: f64) -> Result<(), MeasureError> {
    if radius > 0.0 && radius < 1.0 {
        Ok(())
    } else {
        Err(MeasureError::InvalidParameter(format!("radius {radius} not in (0, 1)")))
    }
}

/// Equal-weight atoms at the cell centres of an `n × n` grid over the square
/// of half-width `radius / √2`, i.e. the square inscribed in the disk of
/// that radius.
pub fn generate_uniform_grid(n_per_side: usize, radius: f64) -> Result<AtomicMeasure, MeasureError> {
    check_radius(radius)?;
    if n_per_side == 0 {
        return Err(MeasureError::InvalidParameter("n_per_side must be at least 1".into()));
    }
    let half = radius * FRAC_1_SQRT_2;
    let step = 2.0 * half / n_per_side as f64;
    let coord = |k: usize| -half + (k as f64 + 0.5) * step;
    let positions: Vec<Point> = (0..n_per_side)
        .flat_map(|j| (0..n_per_side).map(move |i| Point::new(coord(i), coord(j))))
        .filter(|p| p.norm() <= radius)
        .collect();
    AtomicMeasure::uniform(positions)
}

/// Centres of the `2^level` intervals of the middle-half Cantor iterate on
/// `[0, 1]` (each step keeps the outer quarters).
fn cantor_centres(level: u32) -> Vec<f64> {
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..level {
        intervals = intervals
            .into_iter()
            .flat_map(|(a, b)| {
                let q = (b - a) / 4.0;
                [(a, a + q), (b - q, b)]
            })
            .collect();
    }
    intervals.into_iter().map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Product of two middle-half Cantor iterates, scaled into the square
/// inscribed in the disk of the given radius. `4^level` equal atoms.
pub fn generate_cantor_dust(level: u32, radius: f64) -> Result<AtomicMeasure, MeasureError> {
    check_radius(radius)?;
    if level == 0 {
        return Err(MeasureError::InvalidParameter("cantor level must be at least 1".into()));
    }
    if level > MAX_CANTOR_LEVEL {
        return Err(MeasureError::ResourceLimit(format!(
            "cantor level {level} exceeds {MAX_CANTOR_LEVEL} ({} atoms)",
            4u64.saturating_pow(level)
        )));
    }
    let half = radius * FRAC_1_SQRT_2;
    let coords: Vec<f64> = cantor_centres(level).into_iter().map(|u| half * (2.0 * u - 1.0)).collect();
    let positions = coords.iter().flat_map(|&y| coords.iter().map(move |&x| Point::new(x, y))).collect();
    AtomicMeasure::uniform(positions)
}

/// Equal-weight atoms on the pixels bordering the filled Julia set of
/// `z ↦ z² + c`.
///
/// A `pixels × pixels` grid covers `[-R, R]²` with `R = max(2, |c|)`. A pixel
/// is captured when its centre has not escaped `|z| > R` after `max_iter`
/// steps; captured pixels with at least one escaping 8-neighbour become
/// atoms. The atoms are then scaled about the origin so the farthest sits at
/// `radius`.
pub fn generate_julia_boundary(
    c: Point,
    pixels: usize,
    max_iter: u32,
    radius: f64,
) -> Result<AtomicMeasure, MeasureError> {
    check_radius(radius)?;
    if pixels < 2 {
        return Err(MeasureError::InvalidParameter("pixels must be at least 2".into()));
    }
    if pixels > MAX_JULIA_PIXELS {
        return Err(MeasureError::ResourceLimit(format!("pixels {pixels} exceeds {MAX_JULIA_PIXELS}")));
    }
    if max_iter == 0 {
        return Err(MeasureError::InvalidParameter("max_iter must be at least 1".into()));
    }
    let escape = c.norm().max(2.0);
    let step = 2.0 * escape / pixels as f64;
    let centre = |k: usize| -escape + (k as f64 + 0.5) * step;

    let captured: Vec<bool> = (0..pixels * pixels)
        .map(|idx| {
            let mut z = Point::new(centre(idx % pixels), centre(idx / pixels));
            for _ in 0..max_iter {
                z = z * z + c;
                if z.norm_sqr() > escape * escape {
                    return false;
                }
            }
            true
        })
        .collect();

    let is_captured = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < pixels && (j as usize) < pixels && captured[j as usize * pixels + i as usize]
    };
    let mut positions = Vec::new();
    for j in 0..pixels as isize {
        for i in 0..pixels as isize {
            if !is_captured(i, j) {
                continue;
            }
            let borders_escape =
                (-1..=1).flat_map(|dj| (-1..=1).map(move |di| (di, dj))).any(|(di, dj)| !is_captured(i + di, j + dj));
            if borders_escape {
                positions.push(Point::new(centre(i as usize), centre(j as usize)));
            }
        }
    }
    let far = positions.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    if positions.is_empty() || far == 0.0 {
        return Err(MeasureError::Empty);
    }
    let scale = radius / far;
    AtomicMeasure::uniform(positions.into_iter().map(|p| p * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_unit_mass(m: &AtomicMeasure) {
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_grid_is_one_atom_at_origin() {
        let m = generate_uniform_grid(1, 0.5).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms()[0].position, Point::new(0.0, 0.0));
        assert_eq!(m.atoms()[0].weight, 1.0);
    }

    #[test]
    fn grid_weights_and_support() {
        let m = generate_uniform_grid(2, 0.5).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.weights().all(|w| w == 0.25));
        assert_eq!(m.total_mass(), 1.0);

        let m = generate_uniform_grid(64, 0.8).unwrap();
        assert_eq!(m.len(), 64 * 64);
        assert_unit_mass(&m);
        assert!(m.support_radius() <= 0.8);
    }

    #[test]
    fn cantor_iterates() {
        assert_eq!(cantor_centres(1), vec![0.125, 0.875]);
        let m = generate_cantor_dust(1, 0.7).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.weights().all(|w| w == 0.25));
        let m = generate_cantor_dust(3, 0.7).unwrap();
        assert_eq!(m.len(), 64);
        assert_unit_mass(&m);
        assert!(m.support_radius() < 0.7);
        assert!(matches!(generate_cantor_dust(9, 0.7), Err(MeasureError::ResourceLimit(_))));
        assert!(matches!(generate_cantor_dust(0, 0.7), Err(MeasureError::InvalidParameter(_))));
    }

    #[test]
    fn julia_of_z_squared_is_a_circle() {
        let m = generate_julia_boundary(Point::new(0.0, 0.0), 128, 64, 0.6).unwrap();
        assert!(m.len() > 100);
        let step = 4.0 / 128.0 * 0.6;
        for p in m.positions() {
            // unit circle scaled to 0.6, within a couple of (scaled) pixels
            assert!((p.norm() - 0.6).abs() < 3.0 * step, "{p}");
        }
        assert!(m.support_radius() <= 0.6 + 1e-12);
    }

    #[test]
    fn julia_basilica_and_rabbit_like() {
        for c in [Point::new(-1.0, 0.0), Point::new(0.3, 0.5)] {
            let m = generate_julia_boundary(c, 256, 100, 0.9).unwrap();
            assert!(!m.is_empty());
            assert_unit_mass(&m);
            assert!(m.support_radius() < 1.0);
        }
    }

    #[test]
    fn julia_parameter_limits() {
        let c = Point::new(0.0, 0.0);
        assert!(matches!(generate_julia_boundary(c, 4096, 10, 0.5), Err(MeasureError::ResourceLimit(_))));
        // far outside the Mandelbrot set everything escapes at once
        assert!(matches!(generate_julia_boundary(Point::new(10.0, 0.0), 64, 10, 0.5), Err(MeasureError::Empty)));
    }
}
