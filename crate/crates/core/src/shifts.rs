//! Axis-parallel single-point moves that preserve the star discrepancy.
//!
//! An up-shift of point `i` by `δ` is admissible when
//! `δ ≤ max(0, 1/n − min{y_i − y_k : k ≠ i, x_k ≤ x_i})`, i.e. when some point
//! dominated by `i` lies less than `1/n` below it. Right-shifts use the
//! x-gap instead, and down/left-shifts use the points dominating `i`.
//! Up/right moves never raise a closed-box local discrepancy, down/left moves
//! never raise an open-box one, and admissible up/right moves keep the star
//! discrepancy. Admissible down/left moves can raise it on sets that are far
//! from optimal, since they may shrink a worst closed box without losing
//! its points.

use serde::{Deserialize, Serialize};

use crate::discrepancy::star_discrepancy;
use crate::error::{Error, Result};
use crate::pointset::PointSet;

/// Default threshold below which canonicalization ignores a shift.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    fn axis(self) -> usize {
        match self {
            Direction::Left | Direction::Right => 0,
            Direction::Up | Direction::Down => 1,
        }
    }

    fn increases(self) -> bool {
        matches!(self, Direction::Up | Direction::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftMove {
    pub point_index: usize,
    pub direction: Direction,
    pub delta: f64,
}

fn check_index(p: &PointSet, i: usize) -> Result<()> {
    if i >= p.len() {
        return Err(Error::invalid(format!("point index {i} out of range for {} points", p.len())));
    }
    Ok(())
}

/// Largest admissible shift of point `i` in `direction`, clamped to the unit
/// square. Zero when no point is dominated (up/right) or dominating
/// (down/left).
pub fn admissible_delta(p: &PointSet, i: usize, direction: Direction) -> Result<f64> {
    p.require_dim(2)?;
    check_index(p, i)?;
    let xi = p.point(i);
    let axis = direction.axis();
    let up = direction.increases();
    let min_gap = p
        .points()
        .enumerate()
        .filter(|&(k, xk)| {
            k != i
                && if up {
                    xk[0] <= xi[0] && xk[1] <= xi[1]
                } else {
                    xk[0] >= xi[0] && xk[1] >= xi[1]
                }
        })
        .map(|(_, xk)| if up { xi[axis] - xk[axis] } else { xk[axis] - xi[axis] })
        .min_by(f64::total_cmp);
    let Some(gap) = min_gap else {
        return Ok(0.0);
    };
    let delta = (1.0 / p.len() as f64 - gap).max(0.0);
    let room = if up { 1.0 - xi[axis] } else { xi[axis] };
    Ok(delta.min(room))
}

/// Moves one point; every other point is untouched.
pub fn apply_shift(p: &PointSet, mv: &ShiftMove) -> Result<PointSet> {
    p.require_dim(2)?;
    check_index(p, mv.point_index)?;
    if !(mv.delta >= 0.0) {
        return Err(Error::invalid(format!("shift delta {} is negative", mv.delta)));
    }
    let axis = mv.direction.axis();
    let old = p.point(mv.point_index)[axis];
    let new = if mv.direction.increases() { old + mv.delta } else { old - mv.delta };
    let mut out = p.clone();
    out.set_coord(mv.point_index, axis, new)?;
    Ok(out)
}

/// Lifts the lowest point towards height `f = d*(P)` and then the leftmost
/// point towards `x = f`, never past another point's coordinate on that axis.
pub fn boundary_lift(p: &PointSet) -> Result<PointSet> {
    p.require_dim(2)?;
    if p.len() == 1 {
        return Ok(p.clone());
    }
    let f = star_discrepancy(p).value;
    let mut out = p.clone();
    for axis in [1, 0] {
        let values = out.axis(axis);
        let lowest = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .expect("non-empty set");
        let next = values
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != lowest)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let target = values[lowest].max(f.min(next));
        out.set_coord(lowest, axis, target)?;
    }
    Ok(out)
}

/// Applies maximal admissible up- then right-shifts, sweeping points by
/// increasing x, until no admissible shift exceeds `tol`.
pub fn canonicalize(p: &PointSet, tol: f64) -> Result<PointSet> {
    p.require_dim(2)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("canonicalization tolerance must be positive"));
    }
    let mut cur = p.clone();
    loop {
        let xs = cur.axis(0);
        let mut order: Vec<usize> = (0..cur.len()).collect();
        order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
        let mut moved = false;
        for &i in &order {
            for direction in [Direction::Up, Direction::Right] {
                let delta = admissible_delta(&cur, i, direction)?;
                if delta > tol {
                    cur = apply_shift(&cur, &ShiftMove { point_index: i, direction, delta })?;
                    moved = true;
                }
            }
        }
        if !moved {
            return Ok(cur);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::random_set;

    /// The optimal 10-point configuration used to illustrate admissible shifts.
    pub(crate) fn ten_point_optimum() -> PointSet {
        PointSet::from_pairs(&[
            (0.11111, 0.27702),
            (0.21111, 0.51030),
            (0.31111, 0.80191),
            (0.38248, 0.11111),
            (0.51111, 0.67068),
            (0.60966, 0.40824),
            (0.71111, 0.90829),
            (0.76207, 0.11664),
            (0.87804, 0.55680),
            (0.97757, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn admissible_delta_examples() {
        let p = ten_point_optimum();
        let d = admissible_delta(&p, 7, Direction::Up).unwrap();
        assert!((d - 0.09447).abs() < 1e-12, "{d}");
        let q = PointSet::from_pairs(&[(0.1, 0.1), (0.2, 0.6)]).unwrap();
        assert_eq!(admissible_delta(&q, 1, Direction::Up).unwrap(), 0.0);
        assert_eq!(admissible_delta(&q, 0, Direction::Up).unwrap(), 0.0);
        assert_eq!(admissible_delta(&q, 0, Direction::Right).unwrap(), 0.0);
        assert!(admissible_delta(&q, 2, Direction::Up).is_err());
    }

    #[test]
    fn apply_shift_examples() {
        let p = ten_point_optimum();
        let same = apply_shift(&p, &ShiftMove { point_index: 3, direction: Direction::Up, delta: 0.0 });
        assert_eq!(same.unwrap(), p);
        let mv = ShiftMove { point_index: 7, direction: Direction::Up, delta: 0.09447 };
        let up = apply_shift(&p, &mv).unwrap();
        assert_eq!(up.point(7)[0], 0.76207);
        assert!((up.point(7)[1] - 0.21111).abs() < 1e-12);
        let back = apply_shift(&up, &ShiftMove { direction: Direction::Down, ..mv }).unwrap();
        assert!((back.point(7)[1] - 0.11664).abs() < 1e-15);
        let out = ShiftMove { point_index: 9, direction: Direction::Up, delta: 0.1 };
        assert!(matches!(apply_shift(&p, &out), Err(Error::OutOfUnitCube(_))));
    }

    #[test]
    fn boundary_lift_examples() {
        let c = PointSet::from_pairs(&[(0.5, 0.5)]).unwrap();
        assert_eq!(boundary_lift(&c).unwrap(), c);
        let p = ten_point_optimum();
        let lifted = boundary_lift(&p).unwrap();
        let left = lifted.axis(0).into_iter().fold(f64::INFINITY, f64::min);
        assert!((left - 0.1111).abs() < 5e-5, "{left}");
        let again = boundary_lift(&lifted).unwrap();
        assert_eq!(again, lifted);
    }

    #[test]
    fn canonicalize_ten_points() {
        let p = ten_point_optimum();
        let c = canonicalize(&p, DEFAULT_TOL).unwrap();
        assert!((c.point(7)[1] - 0.21111).abs() < 1e-9);
        assert!((c.point(8)[1] - 0.61030).abs() < 1e-9);
        assert!((c.point(9)[0] - 0.97804).abs() < 1e-9);
        assert_eq!(canonicalize(&c, DEFAULT_TOL).unwrap(), c);
        assert!(star_discrepancy(&c).value <= star_discrepancy(&p).value + 1e-12);
    }

    #[test]
    fn canonicalize_preserves_discrepancy() {
        for seed in 0..100 {
            let p = random_set(4 + seed as usize % 12, 2, seed).unwrap();
            let c = canonicalize(&p, DEFAULT_TOL).unwrap();
            assert!(star_discrepancy(&c).value <= star_discrepancy(&p).value + 1e-12);
        }
    }

    #[test]
    fn two_dimensional_only() {
        let p = random_set(3, 3, 0).unwrap();
        assert!(admissible_delta(&p, 0, Direction::Up).is_err());
        assert!(canonicalize(&p, 1e-9).is_err());
    }
}
