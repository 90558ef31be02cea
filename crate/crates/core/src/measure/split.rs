use std::f64::consts::PI;

use serde::Serialize;

use super::{AtomicMeasure, MeasureError, Point};

const MAX_ANGLE_TRIES: usize = 512;
/// Margin kept strictly inside the largest admissible strip half-width.
const MARGIN_SHRINK: f64 = 0.999;

/// A strip `{ |Im(p·e^{-iθ}) − offset| < margin }` cutting the measure into two
/// sides that each carry more than a quarter of the total mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitResult {
    /// Rotation `θ` making the cut lines horizontal.
    pub angle: f64,
    pub offset: f64,
    pub margin: f64,
    /// Mass with rotated imaginary part `≥ offset + margin`.
    pub upper_mass: f64,
    /// Mass with rotated imaginary part `≤ offset − margin`.
    pub lower_mass: f64,
}

impl SplitResult {
    /// Signed coordinate of `p` across the cut lines.
    pub fn project(&self, p: Point) -> f64 {
        project(p, self.angle)
    }

    /// Recounts both side masses of `measure` from scratch.
    pub fn recount(&self, measure: &AtomicMeasure) -> (f64, f64) {
        let mut upper = 0.0;
        let mut lower = 0.0;
        for a in measure.atoms() {
            let q = self.project(a.position);
            if q >= self.offset + self.margin {
                upper += a.weight;
            } else if q <= self.offset - self.margin {
                lower += a.weight;
            }
        }
        (upper, lower)
    }
}

fn project(p: Point, angle: f64) -> f64 {
    (p * Point::from_polar(1.0, -angle)).im
}

/// Finds a half-plane and margin `ζ > 0` such that both sides at distance at
/// least `ζ` from the cut carry more than a quarter of the mass.
///
/// Angles are tried starting at 0 and advancing by the golden angle (mod π).
/// For each angle the cut sits in the gap between consecutive projection
/// values that best balances the cumulative mass; the margin is just under
/// the widest strip that still leaves more than a quarter on each side.
/// An atom carrying more than half the total mass makes the split
/// infeasible.
pub fn split_half_plane(measure: &AtomicMeasure) -> Result<SplitResult, MeasureError> {
    let total = measure.total_mass();
    if measure.len() < 2 {
        return Err(MeasureError::SplitInfeasible("need at least two atoms".into()));
    }
    if let Some((i, a)) = measure.atoms().iter().enumerate().find(|(_, a)| 2.0 * a.weight > total) {
        return Err(MeasureError::SplitInfeasible(format!("atom {i} carries {} of total mass {total}", a.weight)));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    for k in 0..MAX_ANGLE_TRIES {
        let angle = (k as f64 * golden) % PI;
        if let Some(split) = split_at_angle(measure, angle) {
            return Ok(split);
        }
    }
    Err(MeasureError::SplitInfeasible(format!("no admissible cut in {MAX_ANGLE_TRIES} directions")))
}

fn split_at_angle(measure: &AtomicMeasure, angle: f64) -> Option<SplitResult> {
    let total = measure.total_mass();
    let quarter = total / 4.0;
    let mut proj: Vec<(f64, f64)> = measure.atoms().iter().map(|a| (project(a.position, angle), a.weight)).collect();
    proj.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct projection values with their masses
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for (q, w) in proj {
        match levels.last_mut() {
            Some(last) if last.0 == q => last.1 += w,
            _ => levels.push((q, w)),
        }
    }
    if levels.len() < 2 {
        return None;
    }

    // gap g lies between levels[g] and levels[g + 1]
    let mut below = 0.0;
    let mut best: Option<(usize, f64)> = None;
    for (g, level) in levels[..levels.len() - 1].iter().enumerate() {
        below += level.1;
        let balance = below.min(total - below);
        if best.is_none_or(|(_, b)| balance > b) {
            best = Some((g, balance));
        }
    }
    let (gap, balance) = best?;
    if balance <= quarter {
        return None;
    }
    let offset = 0.5 * (levels[gap].0 + levels[gap + 1].0);

    let mut acc = 0.0;
    let upper_edge = levels.iter().rev().find(|l| {
        acc += l.1;
        acc > quarter
    })?;
    acc = 0.0;
    let lower_edge = levels.iter().find(|l| {
        acc += l.1;
        acc > quarter
    })?;
    let widest = (upper_edge.0 - offset).min(offset - lower_edge.0);
    if widest <= 0.0 {
        return None;
    }
    let mut split = SplitResult { angle, offset, margin: MARGIN_SHRINK * widest, upper_mass: 0.0, lower_mass: 0.0 };
    let (upper, lower) = split.recount(measure);
    split.upper_mass = upper;
    split.lower_mass = lower;
    (split.margin > 0.0 && 4.0 * upper > total && 4.0 * lower > total).then_some(split)
}
