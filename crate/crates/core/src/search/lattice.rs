//! Direct search over lattice generator parameters.
//!
//! The star discrepancy of a lattice is piecewise smooth in its parameters,
//! with jumps wherever two points swap rank. A coarse scan finds the basins,
//! and shrinking local grids followed by a golden-section polish settle the
//! best of them. Every returned value is the exact discrepancy of the
//! returned parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::star_discrepancy;
use crate::error::{Error, Result};
use crate::pointset::{lattice1, lattice2};

pub const DEFAULT_COARSE_STEPS: usize = 2000;
pub const DEFAULT_REFINE_ROUNDS: usize = 8;
/// Number of coarse basins refined.
const CANDIDATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice1Result {
    pub r: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice2Result {
    pub r1: f64,
    pub r2: f64,
    pub f: f64,
}

fn wrap(r: f64) -> f64 {
    let w = r - r.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Star discrepancy of `lattice1(n, r)`.
pub fn lattice1_value(n: usize, r: f64) -> f64 {
    star_discrepancy(&lattice1(n, wrap(r)).expect("wrapped parameter is valid")).value
}

/// Star discrepancy of `lattice2(n, r1, r2)`.
pub fn lattice2_value(n: usize, r1: f64, r2: f64) -> f64 {
    star_discrepancy(&lattice2(n, wrap(r1), wrap(r2)).expect("wrapped parameters are valid")).value
}

fn check(n: usize, coarse_steps: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("lattice search needs n >= 2"));
    }
    if coarse_steps < 10 {
        return Err(Error::invalid("coarse_steps must be at least 10"));
    }
    Ok(())
}

/// Indices of the `k` best local minima of a sampled curve, best first.
fn best_basins(values: &[f64], k: usize, periodic: bool) -> Vec<usize> {
    let m = values.len();
    let mut minima: Vec<usize> = (0..m)
        .filter(|&i| {
            let left = if i > 0 { Some(values[i - 1]) } else if periodic { Some(values[m - 1]) } else { None };
            let right =
                if i + 1 < m { Some(values[i + 1]) } else if periodic { Some(values[0]) } else { None };
            left.is_none_or(|l| values[i] <= l) && right.is_none_or(|r| values[i] <= r)
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(k);
    minima
}

/// Zooming local grid around `r` followed by a golden-section polish.
fn refine_1d(f: &impl Fn(f64) -> f64, mut r: f64, mut fr: f64, mut h: f64, rounds: usize) -> (f64, f64) {
    const POINTS: usize = 20;
    for _ in 0..rounds {
        for k in 0..=2 * POINTS {
            let c = wrap(r - h + h * k as f64 / POINTS as f64);
            let v = f(c);
            if v < fr {
                r = c;
                fr = v;
            }
        }
        h /= 5.0;
    }
    // golden-section search on the final bracket; keep only improvements
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (r - h * 5.0, r + h * 5.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (cand, v) in [(c, fc), (d, fd)] {
        if v < fr {
            r = wrap(cand);
            fr = v;
        }
    }
    (r, fr)
}

/// Best single-parameter lattice `(i/n, frac(i·r))` found by direct search.
pub fn lattice_search_1d(n: usize, coarse_steps: usize, refine_rounds: usize) -> Result<Lattice1Result> {
    check(n, coarse_steps)?;
    let f = |r: f64| lattice1_value(n, r);
    let values: Vec<f64> = (0..coarse_steps)
        .into_par_iter()
        .map(|k| f(k as f64 / coarse_steps as f64))
        .collect();
    let h = 1.0 / coarse_steps as f64;
    let refined: Vec<(f64, f64)> = best_basins(&values, CANDIDATES, true)
        .into_par_iter()
        .map(|k| refine_1d(&f, k as f64 / coarse_steps as f64, values[k], h, refine_rounds))
        .collect();
    let (r, _) = refined
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one basin");
    Ok(Lattice1Result { r, f: f(r) })
}

/// Best two-parameter lattice `(frac(i·r1), frac(i·r2))` found by direct
/// search, with `r1` scanned over the band `[0, 3/n]`.
///
/// The search is seeded with `(1/n, r*)` for the best single-parameter `r*`,
/// so it never does worse than [`lattice_search_1d`].
pub fn lattice_search_2d(n: usize, coarse_steps: usize, refine_rounds: usize) -> Result<Lattice2Result> {
    check(n, coarse_steps)?;
    let f = |r1: f64, r2: f64| lattice2_value(n, r1, r2);
    let band = (3.0 / n as f64).min(1.0);
    let steps1 = (coarse_steps / 20).max(10);
    let steps2 = (coarse_steps / 4).max(10);
    let grid: Vec<(f64, f64, f64)> = (0..steps1 * steps2)
        .into_par_iter()
        .map(|k| {
            let r1 = band * (k / steps2) as f64 / steps1 as f64;
            let r2 = (k % steps2) as f64 / steps2 as f64;
            (r1, r2, f(r1, r2))
        })
        .collect();
    let mut seeds: Vec<(f64, f64, f64)> = grid.clone();
    seeds.sort_by(|a, b| a.2.total_cmp(&b.2));
    seeds.truncate(CANDIDATES);
    let one = lattice_search_1d(n, coarse_steps, refine_rounds)?;
    let r1 = 1.0 / n as f64;
    seeds.push((r1, one.r, f(r1, one.r)));

    let (h1, h2) = (band / steps1 as f64, 1.0 / steps2 as f64);
    let refined: Vec<(f64, f64, f64)> = seeds
        .into_par_iter()
        .map(|(a, b, v)| refine_2d(&f, (a, b, v), (h1, h2), refine_rounds))
        .collect();
    let (r1, r2, _) = refined
        .into_iter()
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .expect("at least one seed");
    Ok(Lattice2Result { r1, r2, f: f(r1, r2) })
}

fn refine_2d(
    f: &(impl Fn(f64, f64) -> f64 + Sync),
    start: (f64, f64, f64),
    steps: (f64, f64),
    rounds: usize,
) -> (f64, f64, f64) {
    const HALF: i32 = 5;
    let (mut a, mut b, mut v) = start;
    let (mut h1, mut h2) = steps;
    for _ in 0..rounds {
        for i in -HALF..=HALF {
            for j in -HALF..=HALF {
                let ca = wrap(a + h1 * i as f64 / HALF as f64);
                let cb = wrap(b + h2 * j as f64 / HALF as f64);
                let cv = f(ca, cb);
                if cv < v {
                    (a, b, v) = (ca, cb, cv);
                }
            }
        }
        // coordinate-wise polish along each parameter
        let (na, va) = refine_1d(&|x| f(x, b), a, v, h1 / HALF as f64, 2);
        (a, v) = (na, va);
        let (nb, vb) = refine_1d(&|y| f(a, y), b, v, h2 / HALF as f64, 2);
        (b, v) = (nb, vb);
        h1 /= 3.0;
        h2 /= 3.0;
    }
    (a, b, v)
}
