//! Exhaustive small-n search over grid permutations.
//!
//! Every optimal set can be taken in general position, so it is a
//! permutation of ranks plus increasing grid lines. We enumerate the
//! permutations (one per transpose pair for the star measure) and solve the
//! inner min-max problem of each from stratified random starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{star_lower_bound, Measure};
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::search::inner::{inner_minmax_with, InnerOptions, InnerProblem, DEFAULT_SPACING};

/// Largest n handled by the exhaustive search.
pub const MAX_EXACT_N: usize = 8;
/// Default number of starts per permutation.
pub const DEFAULT_STARTS: usize = 50;
const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationRecord {
    pub sigma: Vec<usize>,
    pub best_f: f64,
    pub best_start: usize,
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub measure: Measure,
    pub starts_per_perm: usize,
    pub seed: u64,
    pub permutations: Vec<PermutationRecord>,
    pub winner_sigma: Vec<usize>,
    pub winner_points: Vec<Vec<f64>>,
    pub certified_f: f64,
    /// True when the search stopped early because the incumbent met the
    /// general `1/n` lower bound, which proves it optimal.
    pub stopped_at_lower_bound: bool,
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub points: PointSet,
    pub f: f64,
    pub certificate: Certificate,
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("a larger element exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

pub fn inverse(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (u, &s) in sigma.iter().enumerate() {
        inv[s] = u;
    }
    inv
}

/// Stratified increasing start: one coordinate per cell `((j-1)/n, j/n)`.
/// Start 0 uses the cell midpoints.
pub fn stratified_start(n: usize, rng: &mut ChaCha8Rng, index: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let u = if index == 0 { 0.5 } else { rng.random_range(0.05..0.95) };
            (j as f64 + u) / n as f64
        })
        .collect()
}

fn start_rng(seed: u64, perm: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (perm as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

struct PermOutcome {
    record: PermutationRecord,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn solve_permutation(
    sigma: &[usize],
    rank: usize,
    starts: usize,
    seed: u64,
    incumbent: f64,
    measure: Measure,
) -> Result<PermOutcome> {
    let ip = InnerProblem::with_measure(sigma.to_vec(), DEFAULT_SPACING, measure)?;
    let mut rng = start_rng(seed, rank);
    let mut best: Option<PermOutcome> = None;
    let mut all_pruned = true;
    for s in 0..starts {
        let start = stratified_start(ip.n(), &mut rng, s);
        let local = best.as_ref().map_or(incumbent, |b| b.record.best_f.min(incumbent));
        let opts = InnerOptions { incumbent: local, ..InnerOptions::default() };
        let r = inner_minmax_with(&ip, &start, &opts)?;
        all_pruned &= r.pruned;
        if best.as_ref().is_none_or(|b| r.f < b.record.best_f) {
            best = Some(PermOutcome {
                record: PermutationRecord {
                    sigma: sigma.to_vec(),
                    best_f: r.f,
                    best_start: s,
                    pruned: false,
                },
                x: r.x,
                y: r.y,
            });
        }
    }
    let mut out = best.ok_or_else(|| Error::invalid("at least one start is required"))?;
    out.record.pruned = all_pruned;
    Ok(out)
}

/// Best set over all permutations, certified by the exact star engine.
///
/// The search stops after the first chunk of permutations whose incumbent
/// meets the `1/n` lower bound, since nothing can beat it.
pub fn exact_small_2d(n: usize, starts_per_perm: usize, seed: u64) -> Result<ExactResult> {
    exact_small(n, starts_per_perm, seed, Measure::Star)
}

/// As [`exact_small_2d`] for the star or the 4-corner measure.
pub fn exact_small(n: usize, starts_per_perm: usize, seed: u64, measure: Measure) -> Result<ExactResult> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if n > MAX_EXACT_N {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search is limited to n <= {MAX_EXACT_N} (n = {n} has {} permutations); \
             use lattice search or shift descent for larger sets",
            (1..=n).product::<usize>()
        )));
    }
    if starts_per_perm == 0 {
        return Err(Error::invalid("starts_per_perm must be at least 1"));
    }
    if !matches!(measure, Measure::Star | Measure::Corner4) {
        return Err(Error::UnsupportedMeasure(measure.to_string()));
    }
    // the transpose of a set has the same star discrepancy; for 4 corners
    // the transpose maps corner 2 to corner 4, so the reduction still holds
    let perms: Vec<Vec<usize>> =
        permutations(n).into_iter().filter(|s| *s <= inverse(s)).collect();

    let mut incumbent = f64::INFINITY;
    let mut winner: Option<(usize, PermOutcome)> = None;
    let mut records = Vec::with_capacity(perms.len());
    // the 4-corner value dominates the star value, so the bound serves both
    let bound = star_lower_bound(n, 2);
    let mut stopped_at_lower_bound = false;
    for (c, chunk) in perms.chunks(CHUNK).enumerate() {
        let outcomes: Vec<Result<PermOutcome>> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, sigma)| {
                solve_permutation(sigma, c * CHUNK + k, starts_per_perm, seed, incumbent, measure)
            })
            .collect();
        for (k, o) in outcomes.into_iter().enumerate() {
            let o = o?;
            let rank = c * CHUNK + k;
            records.push(o.record.clone());
            let better = match &winner {
                None => true,
                Some((_, w)) => o.record.best_f < w.record.best_f,
            };
            if better {
                incumbent = o.record.best_f;
                winner = Some((rank, o));
            }
        }
        if bound > 0.0 && incumbent <= bound + 1e-12 {
            stopped_at_lower_bound = true;
            break;
        }
    }
    let (_, w) = winner.expect("at least one permutation");
    let ip = InnerProblem::with_measure(w.record.sigma.clone(), DEFAULT_SPACING, measure)?;
    let points = ip.points(&w.x, &w.y)?;
    let f = ip.certify(&w.x, &w.y)?;
    let certificate = Certificate {
        n,
        measure,
        starts_per_perm,
        seed,
        permutations: records,
        winner_sigma: w.record.sigma.clone(),
        winner_points: points.to_vecs(),
        certified_f: f,
        stopped_at_lower_bound,
    };
    Ok(ExactResult { points, f, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::star_discrepancy;

    #[test]
    fn permutation_enumeration() {
        assert_eq!(permutations(1), vec![vec![0]]);
        let p3 = permutations(3);
        assert_eq!(p3.len(), 6);
        assert_eq!(p3[1], vec![0, 2, 1]);
        assert!(p3.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(inverse(&[1, 2, 0]), vec![2, 0, 1]);
    }

    #[test]
    fn small_optima() {
        let r = exact_small_2d(1, 5, 0).unwrap();
        assert!((r.f - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-9);
        let r = exact_small_2d(2, 10, 0).unwrap();
        assert!((r.f - 0.366).abs() < 1e-3, "{}", r.f);
        assert_eq!(r.f, star_discrepancy(&r.points).value);
        assert_eq!(r.certificate.permutations.len(), 2);
    }

    #[test]
    fn limits() {
        assert!(matches!(exact_small_2d(9, 1, 0), Err(Error::ResourceLimit(_))));
        assert!(exact_small_2d(0, 1, 0).is_err());
        assert!(exact_small_2d(3, 0, 0).is_err());
    }
}
