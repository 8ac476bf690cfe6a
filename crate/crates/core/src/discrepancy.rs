//! Exact L∞ discrepancy engines and their naive oracles.
//!
//! Every engine returns a [`DiscrepancyReport`] whose witness box reproduces
//! the reported value through [`DiscrepancyReport::recompute`]. Overfill is
//! measured on closed boxes (counting with `<=`), underfill on open boxes
//! (counting with `<`), which turns the supremum over half-open boxes into a
//! maximum over finitely many grid boxes.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::{grid_of, reflections, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxKind {
    Closed,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Star,
    Extreme,
    Periodic,
    Corner4,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Star => "star",
            Measure::Extreme => "extreme",
            Measure::Periodic => "periodic",
            Measure::Corner4 => "corner4",
        })
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Measure::Star),
            "extreme" => Ok(Measure::Extreme),
            "periodic" => Ok(Measure::Periodic),
            "corner4" => Ok(Measure::Corner4),
            other => Err(Error::UnsupportedMeasure(other.to_string())),
        }
    }
}

/// A discrepancy value together with the box attaining it.
///
/// For periodic reports `wrapped[j]` marks an axis whose interval wraps
/// around, i.e. covers `[lower, 1] ∪ [0, upper]`. For 4-corner reports the
/// witness lives in the frame of the reflection selected by `corner_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub value: f64,
    pub witness_lower: Vec<f64>,
    pub witness_upper: Vec<f64>,
    pub box_kind: BoxKind,
    pub corner_id: u8,
    pub measure: Measure,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wrapped: Vec<bool>,
}

impl DiscrepancyReport {
    /// Recomputes the local discrepancy of the witness box from scratch.
    pub fn recompute(&self, p: &PointSet) -> Result<f64> {
        match self.measure {
            Measure::Star | Measure::Corner4 => {
                let frame = corner_frame(p, self.corner_id)?;
                match self.box_kind {
                    BoxKind::Closed => local_closed(&frame, &self.witness_upper),
                    BoxKind::Open => local_open(&frame, &self.witness_upper),
                }
            }
            Measure::Extreme | Measure::Periodic => {
                let wrapped = if self.wrapped.is_empty() {
                    vec![false; p.dim()]
                } else {
                    self.wrapped.clone()
                };
                local_box(p, &self.witness_lower, &self.witness_upper, &wrapped, self.box_kind)
            }
        }
    }
}

fn check_query(p: &PointSet, q: &[f64]) -> Result<()> {
    if q.len() != p.dim() {
        return Err(Error::invalid(format!(
            "query has {} coordinates, point set has dimension {}",
            q.len(),
            p.dim()
        )));
    }
    Ok(())
}

/// `|P ∩ [0,q]| / n − λ([0,q])`.
pub fn local_closed(p: &PointSet, q: &[f64]) -> Result<f64> {
    check_query(p, q)?;
    let count = p.points().filter(|x| x.iter().zip(q).all(|(c, b)| c <= b)).count();
    Ok(count as f64 / p.len() as f64 - volume(q))
}

/// `λ([0,q)) − |P ∩ [0,q)| / n`.
pub fn local_open(p: &PointSet, q: &[f64]) -> Result<f64> {
    check_query(p, q)?;
    let count = p.points().filter(|x| x.iter().zip(q).all(|(c, b)| c < b)).count();
    Ok(volume(q) - count as f64 / p.len() as f64)
}

fn volume(q: &[f64]) -> f64 {
    q.iter().product()
}

fn axis_contains(c: f64, lo: f64, hi: f64, wrapped: bool, kind: BoxKind) -> bool {
    match (wrapped, kind) {
        (false, BoxKind::Closed) => lo <= c && c <= hi,
        (false, BoxKind::Open) => lo < c && c < hi,
        (true, BoxKind::Closed) => c >= lo || c <= hi,
        (true, BoxKind::Open) => c > lo || c < hi,
    }
}

fn axis_length(lo: f64, hi: f64, wrapped: bool) -> f64 {
    if wrapped {
        1.0 - lo + hi
    } else {
        hi - lo
    }
}

/// Local discrepancy of a general (possibly wrapped) box: overfill for closed
/// boxes, underfill for open ones. Open boxes exclude their lower faces too.
pub fn local_box(
    p: &PointSet,
    lower: &[f64],
    upper: &[f64],
    wrapped: &[bool],
    kind: BoxKind,
) -> Result<f64> {
    check_query(p, lower)?;
    check_query(p, upper)?;
    if wrapped.len() != p.dim() {
        return Err(Error::invalid("wrap flags do not match the dimension"));
    }
    let count = p
        .points()
        .filter(|x| {
            (0..x.len()).all(|j| axis_contains(x[j], lower[j], upper[j], wrapped[j], kind))
        })
        .count();
    let vol: f64 = (0..lower.len())
        .map(|j| axis_length(lower[j], upper[j], wrapped[j]))
        .product();
    let frac = count as f64 / p.len() as f64;
    Ok(match kind {
        BoxKind::Closed => frac - vol,
        BoxKind::Open => vol - frac,
    })
}

/// Best box seen so far, ordered by value and then by enumeration key.
#[derive(Debug, Clone)]
struct Best {
    value: f64,
    key: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    kind: BoxKind,
    wrapped: Vec<bool>,
}

impl Best {
    fn empty() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            key: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            kind: BoxKind::Closed,
            wrapped: Vec::new(),
        }
    }

    /// Deterministic merge of two partial maxima.
    fn merge(self, other: Best) -> Best {
        if other.value > self.value || (other.value == self.value && other.key < self.key) {
            other
        } else {
            self
        }
    }

    fn into_report(self, measure: Measure) -> DiscrepancyReport {
        DiscrepancyReport {
            value: self.value,
            witness_lower: self.lower,
            witness_upper: self.upper,
            box_kind: self.kind,
            corner_id: 1,
            measure,
            wrapped: self.wrapped,
        }
    }
}

/// Exact L∞ star discrepancy.
///
/// Two-dimensional sets use a column sweep in `O(n² log n)`; other dimensions
/// enumerate the full grid.
pub fn star_discrepancy(p: &PointSet) -> DiscrepancyReport {
    if p.dim() == 2 {
        star_2d(p)
    } else {
        star_general(p)
    }
}

fn star_2d(p: &PointSet) -> DiscrepancyReport {
    let grid = grid_of(p);
    let gx = &grid.gamma_bar[0];
    let gy = &grid.gamma_bar[1];
    let n = p.len() as f64;
    let mut pts: Vec<(f64, f64)> = p.points().map(|q| (q[0], q[1])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut closed_ys: Vec<f64> = Vec::with_capacity(pts.len());
    let mut open_ys: Vec<f64> = Vec::with_capacity(pts.len());
    let (mut next_closed, mut next_open) = (0, 0);
    let mut best = Best::empty();
    for (i, &qx) in gx.iter().enumerate() {
        while next_closed < pts.len() && pts[next_closed].0 <= qx {
            insert_sorted(&mut closed_ys, pts[next_closed].1);
            next_closed += 1;
        }
        while next_open < pts.len() && pts[next_open].0 < qx {
            insert_sorted(&mut open_ys, pts[next_open].1);
            next_open += 1;
        }
        for (j, &qy) in gy.iter().enumerate() {
            let vol = qx * qy;
            let closed = closed_ys.partition_point(|&y| y <= qy) as f64 / n - vol;
            let open = vol - open_ys.partition_point(|&y| y < qy) as f64 / n;
            for (value, kind) in [(closed, BoxKind::Closed), (open, BoxKind::Open)] {
                if value > best.value {
                    best = Best {
                        value,
                        key: vec![i, j],
                        lower: vec![0.0, 0.0],
                        upper: vec![qx, qy],
                        kind,
                        wrapped: Vec::new(),
                    };
                }
            }
        }
    }
    best.into_report(Measure::Star)
}

fn insert_sorted(v: &mut Vec<f64>, y: f64) {
    let at = v.partition_point(|&c| c <= y);
    v.insert(at, y);
}

/// Calls `f` on every index tuple of a grid with the given axis sizes, in
/// lexicographic order.
fn for_each_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    if sizes.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; sizes.len()];
    loop {
        f(&idx);
        let mut axis = sizes.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < sizes[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn star_general(p: &PointSet) -> DiscrepancyReport {
    let grid = grid_of(p);
    let sizes: Vec<usize> = grid.gamma_bar.iter().map(Vec::len).collect();
    let mut best = Best::empty();
    let mut q = vec![0.0; p.dim()];
    for_each_index(&sizes, |idx| {
        for (j, &i) in idx.iter().enumerate() {
            q[j] = grid.gamma_bar[j][i];
        }
        let closed = local_closed(p, &q).expect("dimension checked");
        let open = local_open(p, &q).expect("dimension checked");
        for (value, kind) in [(closed, BoxKind::Closed), (open, BoxKind::Open)] {
            if value > best.value {
                best = Best {
                    value,
                    key: idx.to_vec(),
                    lower: vec![0.0; q.len()],
                    upper: q.clone(),
                    kind,
                    wrapped: Vec::new(),
                };
            }
        }
    });
    best.into_report(Measure::Star)
}

/// Rank structure for counting points in unions of grid rectangles.
struct RankGrid {
    values: [Vec<f64>; 2],
    /// `cum[a * (my + 1) + b]` = points with x-rank < a and y-rank < b.
    cum: Vec<usize>,
}

impl RankGrid {
    fn new(p: &PointSet) -> Self {
        let grid = grid_of(p);
        let axis_values = |j: usize| {
            let mut v = grid.gamma_bar[j].clone();
            if v[0] != 0.0 {
                v.insert(0, 0.0);
            }
            v
        };
        let values = [axis_values(0), axis_values(1)];
        let (mx, my) = (values[0].len(), values[1].len());
        let mut counts = vec![0usize; mx * my];
        for q in p.points() {
            let a = values[0].partition_point(|&c| c < q[0]);
            let b = values[1].partition_point(|&c| c < q[1]);
            counts[a * my + b] += 1;
        }
        let w = my + 1;
        let mut cum = vec![0usize; (mx + 1) * w];
        for a in 0..mx {
            for b in 0..my {
                cum[(a + 1) * w + b + 1] =
                    counts[a * my + b] + cum[a * w + b + 1] + cum[(a + 1) * w + b] - cum[a * w + b];
            }
        }
        RankGrid { values, cum }
    }

    /// Points with ranks in the inclusive ranges `xr` × `yr`.
    fn rect(&self, xr: (usize, usize), yr: (usize, usize)) -> usize {
        let w = self.values[1].len() + 1;
        let (a0, a1, b0, b1) = (xr.0, xr.1 + 1, yr.0, yr.1 + 1);
        self.cum[a1 * w + b1] + self.cum[a0 * w + b0] - self.cum[a0 * w + b1] - self.cum[a1 * w + b0]
    }
}

/// One axis interval between grid values `lo` and `hi`, stored as up to two
/// inclusive rank ranges.
#[derive(Clone, Copy)]
struct AxisInterval {
    lo: usize,
    hi: usize,
    wrapped: bool,
    length: f64,
    ranges: [Option<(usize, usize)>; 2],
}

fn range(a: isize, b: isize) -> Option<(usize, usize)> {
    (a <= b).then_some((a as usize, b as usize))
}

fn axis_intervals(
    values: &[f64],
    kind: BoxKind,
    allow_wrap: bool,
    lower_ok: impl Fn(usize) -> bool,
    upper_ok: impl Fn(usize) -> bool,
) -> Vec<AxisInterval> {
    let m = values.len() as isize;
    let mut out = Vec::new();
    for lo in 0..values.len() {
        if !lower_ok(lo) {
            continue;
        }
        for hi in 0..values.len() {
            if !upper_ok(hi) {
                continue;
            }
            let (l, h) = (lo as isize, hi as isize);
            let plain = match kind {
                BoxKind::Closed => lo <= hi,
                BoxKind::Open => lo < hi,
            };
            let interval = if plain {
                let ranges = match kind {
                    BoxKind::Closed => [range(l, h), None],
                    BoxKind::Open => [range(l + 1, h - 1), None],
                };
                AxisInterval { lo, hi, wrapped: false, length: values[hi] - values[lo], ranges }
            } else if allow_wrap {
                let ranges = match kind {
                    BoxKind::Closed => [range(l, m - 1), range(0, h)],
                    BoxKind::Open => [range(l + 1, m - 1), range(0, h - 1)],
                };
                AxisInterval {
                    lo,
                    hi,
                    wrapped: true,
                    length: axis_length(values[lo], values[hi], true),
                    ranges,
                }
            } else {
                continue;
            };
            out.push(interval);
        }
    }
    out
}

/// Maximum over all products of x- and y-intervals, for both box kinds.
fn box_family_max(p: &PointSet, allow_wrap: bool, restrict_corners: bool) -> Best {
    let rg = RankGrid::new(p);
    let grid = grid_of(p);
    let n = p.len() as f64;
    let in_gamma = |j: usize, i: usize| -> bool {
        let v = rg.values[j][i];
        v == 0.0 || grid.gamma[j].binary_search_by(|c| c.total_cmp(&v)).is_ok()
    };
    let in_gamma_bar = |j: usize, i: usize| -> bool {
        let v = rg.values[j][i];
        grid.gamma_bar[j].binary_search_by(|c| c.total_cmp(&v)).is_ok()
    };
    let families: Vec<[Vec<AxisInterval>; 2]> = [BoxKind::Closed, BoxKind::Open]
        .iter()
        .map(|&kind| {
            let axis = |j: usize| {
                axis_intervals(
                    &rg.values[j],
                    kind,
                    allow_wrap,
                    |i| !restrict_corners || in_gamma(j, i),
                    |i| !restrict_corners || in_gamma_bar(j, i),
                )
            };
            [axis(0), axis(1)]
        })
        .collect();

    let count = |ix: &AxisInterval, iy: &AxisInterval| -> usize {
        let mut c = 0;
        for xr in ix.ranges.iter().flatten() {
            for yr in iy.ranges.iter().flatten() {
                c += rg.rect(*xr, *yr);
            }
        }
        c
    };

    // One task per lower x index; keys order (x-lo, x-hi, y-lo, y-hi, kind).
    let mx = rg.values[0].len();
    (0..mx)
        .into_par_iter()
        .map(|x_lo| {
            let mut best = Best::empty();
            let mut consider = |ix: &AxisInterval, iy: &AxisInterval, kind: BoxKind| {
                let frac = count(ix, iy) as f64 / n;
                let vol = ix.length * iy.length;
                let value = match kind {
                    BoxKind::Closed => frac - vol,
                    BoxKind::Open => vol - frac,
                };
                let key = vec![ix.lo, ix.hi, iy.lo, iy.hi, kind as usize];
                if value > best.value || (value == best.value && key < best.key) {
                    best = Best {
                        value,
                        key,
                        lower: vec![rg.values[0][ix.lo], rg.values[1][iy.lo]],
                        upper: vec![rg.values[0][ix.hi], rg.values[1][iy.hi]],
                        kind,
                        wrapped: if allow_wrap { vec![ix.wrapped, iy.wrapped] } else { Vec::new() },
                    };
                }
            };
            for (fam, kind) in families.iter().zip([BoxKind::Closed, BoxKind::Open]) {
                for ix in fam[0].iter().filter(|ix| ix.lo == x_lo) {
                    for iy in &fam[1] {
                        consider(ix, iy, kind);
                    }
                }
            }
            best
        })
        .reduce(Best::empty, Best::merge)
}

/// Exact L∞ extreme discrepancy of a 2D set (all axis-parallel boxes).
pub fn extreme_discrepancy(p: &PointSet) -> Result<DiscrepancyReport> {
    p.require_dim(2)?;
    Ok(box_family_max(p, false, true).into_report(Measure::Extreme))
}

/// Exact L∞ periodic discrepancy of a 2D set (boxes on the torus).
pub fn periodic_discrepancy(p: &PointSet) -> Result<DiscrepancyReport> {
    p.require_dim(2)?;
    Ok(box_family_max(p, true, false).into_report(Measure::Periodic))
}

/// The set as seen from corner `id`: 1 is the origin, 2 reflects x, 3 both
/// axes, 4 reflects y.
pub fn corner_frame(p: &PointSet, id: u8) -> Result<PointSet> {
    if id == 1 {
        return Ok(p.clone());
    }
    let (p2, p3, p4) = reflections(p)?;
    match id {
        2 => Ok(p2),
        3 => Ok(p3),
        4 => Ok(p4),
        _ => Err(Error::invalid(format!("corner id {id} is not in 1..=4"))),
    }
}

/// Exact L∞ 4-corner discrepancy: the worst star discrepancy over the four
/// corner anchors.
pub fn corner4_discrepancy(p: &PointSet) -> Result<DiscrepancyReport> {
    p.require_dim(2)?;
    let mut best: Option<DiscrepancyReport> = None;
    for id in 1..=4u8 {
        let mut r = star_discrepancy(&corner_frame(p, id)?);
        r.corner_id = id;
        r.measure = Measure::Corner4;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    Ok(best.expect("four corners evaluated"))
}

/// Dispatches to the engine for `measure`.
pub fn discrepancy(p: &PointSet, measure: Measure) -> Result<DiscrepancyReport> {
    match measure {
        Measure::Star => Ok(star_discrepancy(p)),
        Measure::Extreme => extreme_discrepancy(p),
        Measure::Periodic => periodic_discrepancy(p),
        Measure::Corner4 => corner4_discrepancy(p),
    }
}

/// Grid boxes that can attain the star discrepancy, as indices into `Γ̄`.
///
/// A closed box is critical when every face carries a point of the box; an
/// open box when every face either lies at 1 or carries a point of its
/// closure.
pub fn critical_boxes(p: &PointSet) -> Vec<(Vec<usize>, BoxKind)> {
    let grid = grid_of(p);
    let sizes: Vec<usize> = grid.gamma_bar.iter().map(Vec::len).collect();
    let mut out = Vec::new();
    let mut q = vec![0.0; p.dim()];
    for_each_index(&sizes, |idx| {
        for (j, &i) in idx.iter().enumerate() {
            q[j] = grid.gamma_bar[j][i];
        }
        let touches = |j: usize| {
            p.points().any(|x| x[j] == q[j] && x.iter().zip(&q).all(|(c, b)| c <= b))
        };
        if (0..q.len()).all(touches) {
            out.push((idx.to_vec(), BoxKind::Closed));
        }
        if (0..q.len()).all(|j| q[j] == 1.0 || touches(j)) {
            out.push((idx.to_vec(), BoxKind::Open));
        }
    });
    out
}

/// Naive star (or 4-corner) evaluation on a raster, with `O(n)` counting per
/// box. With `augment` the raster is merged with the point grid, which makes
/// the result exact.
pub fn raster_oracle(p: &PointSet, resolution: usize, measure: Measure, augment: bool) -> Result<f64> {
    if resolution < 2 {
        return Err(Error::invalid("raster resolution must be at least 2"));
    }
    match measure {
        Measure::Star => Ok(raster_star(p, resolution, augment)),
        Measure::Corner4 => {
            let mut best = f64::NEG_INFINITY;
            for id in 1..=4 {
                best = best.max(raster_star(&corner_frame(p, id)?, resolution, augment));
            }
            Ok(best)
        }
        other => Err(Error::UnsupportedMeasure(other.to_string())),
    }
}

fn raster_star(p: &PointSet, resolution: usize, augment: bool) -> f64 {
    let grid = grid_of(p);
    let axes: Vec<Vec<f64>> = (0..p.dim())
        .map(|j| {
            let mut v: Vec<f64> = (1..=resolution).map(|k| k as f64 / resolution as f64).collect();
            if augment {
                v.extend_from_slice(&grid.gamma_bar[j]);
                v.sort_by(f64::total_cmp);
                v.dedup();
            }
            v
        })
        .collect();
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut best = f64::NEG_INFINITY;
    let mut q = vec![0.0; p.dim()];
    for_each_index(&sizes, |idx| {
        for (j, &i) in idx.iter().enumerate() {
            q[j] = axes[j][i];
        }
        best = best
            .max(local_closed(p, &q).expect("dimension checked"))
            .max(local_open(p, &q).expect("dimension checked"));
    });
    best
}

/// The general lower bound `1/n`, valid for `dim = 2, n ≥ 4` and `dim ≥ 3, n ≥ 3`.
pub fn star_lower_bound(n: usize, dim: usize) -> f64 {
    if n >= 1 && ((dim == 2 && n >= 4) || (dim >= 3 && n >= 3)) {
        1.0 / n as f64
    } else {
        0.0
    }
}
