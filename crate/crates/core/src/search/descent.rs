//! Randomized single-point descent for planar sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discrepancy::star_discrepancy;
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::shifts::{canonicalize, DEFAULT_TOL};

/// Improves `p` by moving one point at a time.
///
/// Each proposal either nudges a random point locally or drops it at a
/// uniform position, canonicalizes the result and keeps it only when the
/// star discrepancy strictly decreases. The output is never worse than the
/// input.
pub fn shift_descent(p: &PointSet, max_iters: usize, seed: u64) -> Result<PointSet> {
    p.require_dim(2)?;
    let n = p.len();
    if n < 4 {
        return Err(Error::invalid("shift descent needs at least 4 points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = p.clone();
    let mut best_f = star_discrepancy(&best).value;
    let scale = 1.0 / n as f64;
    for _ in 0..max_iters {
        let i = rng.random_range(0..n);
        let mut q = best.clone();
        if rng.random_bool(0.75) {
            let s = scale * rng.random_range(0.01..1.0);
            for j in 0..2 {
                let v = q.point(i)[j] + rng.random_range(-s..=s);
                q.set_coord(i, j, v.clamp(0.0, 1.0))?;
            }
        } else {
            q.set_coord(i, 0, rng.random_range(0.0..=1.0))?;
            q.set_coord(i, 1, rng.random_range(0.0..=1.0))?;
        }
        let q = canonicalize(&q, DEFAULT_TOL)?;
        let f = star_discrepancy(&q).value;
        if f < best_f {
            best = q;
            best_f = f;
        }
    }
    Ok(best)
}
