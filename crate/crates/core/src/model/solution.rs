//! Solver output: parsing, constraint checking and point extraction.
//!
//! A [`SolutionRecord`] maps variable names to values. It is read either
//! from a JSON object (`{"x_1": 0.2, ...}` or
//! `{"assignment": {...}, "source": "..."}`) or from `name value` lines with
//! `#` comments. The `embed_*` helpers build records from known point sets,
//! which is how models are checked against the discrepancy engines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Family, ModelIR, VarKind};
use crate::discrepancy::{discrepancy, Measure};
use crate::error::{Error, Result};
use crate::pointset::PointSet;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub assignment: BTreeMap<String, f64>,
    #[serde(default)]
    pub source: String,
}

impl SolutionRecord {
    pub fn new(source: impl Into<String>) -> Self {
        Self { assignment: BTreeMap::new(), source: source.into() }
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.assignment.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.assignment.get(name).copied()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        let bad = |m: &str| Error::Parse { line: 0, message: m.to_string() };
        let obj = v.as_object().ok_or_else(|| bad("solution must be a JSON object"))?;
        let (map, source) = match obj.get("assignment") {
            Some(inner) => (
                inner.as_object().ok_or_else(|| bad("'assignment' must be an object"))?,
                obj.get("source").and_then(|s| s.as_str()).unwrap_or_default().to_string(),
            ),
            None => (obj, String::new()),
        };
        let mut rec = Self::new(source);
        for (k, v) in map {
            let x = v.as_f64().ok_or_else(|| bad(&format!("value of '{k}' is not a number")))?;
            rec.set(k.trim(), x);
        }
        Ok(rec)
    }

    /// `name value` per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rec = Self::new("");
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse { line: i as u64 + 1, message: m };
            let mut it = line.split(|c: char| c.is_whitespace() || c == '=' || c == ',').filter(|s| !s.is_empty());
            let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
                return Err(err(format!("expected 'name value', found '{line}'")));
            };
            let v = value.parse().map_err(|_| err(format!("bad value '{value}'")))?;
            rec.set(name, v);
        }
        Ok(rec)
    }

    /// JSON when the first non-blank character is `{`, text otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_text(text)
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rec = Self::parse(&text)?;
        if rec.source.is_empty() {
            rec.source = path.display().to_string();
        }
        Ok(rec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Constraint name, or `bound:<variable>` for a bound.
    pub constraint: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub feasible: bool,
    pub max_violation: f64,
    /// Every constraint or bound violated by more than the tolerance.
    pub violations: Vec<Violation>,
    pub objective: f64,
}

/// Variable values in model order; binaries rounded at 0.5, omitted fixed
/// variables filled in.
fn values(m: &ModelIR, s: &SolutionRecord) -> Result<Vec<f64>> {
    m.variables
        .iter()
        .map(|v| match (s.get(&v.name), v.fixed()) {
            (Some(x), _) if v.kind == VarKind::Binary => Ok(if x >= 0.5 { 1.0 } else { 0.0 }),
            (Some(x), _) => Ok(x),
            (None, Some(x)) => Ok(x),
            (None, None) => Err(Error::IncompleteSolution(v.name.clone())),
        })
        .collect()
}

/// Evaluates every bound and constraint of `m` at `s`.
pub fn check_solution(m: &ModelIR, s: &SolutionRecord, tol: f64) -> Result<CheckReport> {
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be non-negative"));
    }
    let vals = values(m, s)?;
    let mut max_violation: f64 = 0.0;
    let mut violations = Vec::new();
    let mut record = |name: String, r: f64| {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        max_violation = max_violation.max(r);
        if r > tol {
            violations.push(Violation { constraint: name, residual: r });
        }
    };
    for (v, &x) in m.variables.iter().zip(&vals) {
        record(format!("bound:{}", v.name), (v.lower - x).max(x - v.upper).max(0.0));
    }
    for c in &m.constraints {
        record(c.name.clone(), c.violation(&vals));
    }
    Ok(CheckReport { feasible: max_violation <= tol, max_violation, violations, objective: vals[m.objective] })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extracted {
    pub points: PointSet,
    /// Exact discrepancy of `points` under `measure`.
    pub certified_f: f64,
    pub model_f: f64,
    pub measure: Measure,
}

fn measure_of(family: Family) -> Measure {
    match family {
        Family::Extreme => Measure::Extreme,
        Family::Periodic => Measure::Periodic,
        Family::Corner4 => Measure::Corner4,
        _ => Measure::Star,
    }
}

/// Rebuilds the point set encoded by `s` and certifies it with the exact
/// engine matching the model family.
pub fn extract_pointset(m: &ModelIR, s: &SolutionRecord) -> Result<Extracted> {
    let family = m.family.ok_or_else(|| Error::Extraction("model carries no family tag".into()))?;
    let n = m.n;
    if n == 0 {
        return Err(Error::Extraction("model carries no point count".into()));
    }
    let vals = values(m, s)?;
    let get = |name: String| -> Result<f64> {
        let i = m.var_index(&name).ok_or_else(|| Error::Extraction(format!("model has no variable '{name}'")))?;
        Ok(vals[i].clamp(0.0, 1.0))
    };
    let points = match family {
        Family::Classical | Family::Lattice | Family::Lattice2 => {
            let mut pts = Vec::with_capacity(n);
            for i in 1..=n {
                pts.push(vec![get(format!("x_{}", 2 * i - 1))?, get(format!("x_{}", 2 * i))?]);
            }
            PointSet::new(2, &pts)?
        }
        Family::Assign3d => {
            let mut pts = vec![vec![0.0; 3]; n];
            let mut used = [vec![0usize; n], vec![0usize; n], vec![0usize; n]];
            for i in 1..=n {
                for j in 1..=n {
                    for k in 1..=n {
                        if get(format!("a_{i}_{j}_{k}"))? == 1.0 {
                            used[0][i - 1] += 1;
                            used[1][j - 1] += 1;
                            used[2][k - 1] += 1;
                            pts[i - 1] = vec![get(format!("x_{i}"))?, get(format!("y_{j}"))?, get(format!("z_{k}"))?];
                        }
                    }
                }
            }
            for (axis, counts) in ["x", "y", "z"].iter().zip(&used) {
                if let Some(t) = counts.iter().position(|&c| c != 1) {
                    return Err(Error::Extraction(format!(
                        "{axis}-slice {} holds {} assigned cells",
                        t + 1,
                        counts[t]
                    )));
                }
            }
            PointSet::new(3, &pts)?
        }
        Family::Assign2d | Family::Extreme | Family::Periodic | Family::Corner4 => {
            let mut pts = Vec::with_capacity(n);
            let mut cols = vec![0usize; n];
            for i in 1..=n {
                let mut row = Vec::new();
                for j in 1..=n {
                    if get(format!("a_{i}_{j}"))? == 1.0 {
                        row.push(j);
                        cols[j - 1] += 1;
                    }
                }
                if row.len() != 1 {
                    return Err(Error::Extraction(format!("assignment row {i} sums to {}", row.len())));
                }
                pts.push(vec![get(format!("x_{i}"))?, get(format!("y_{}", row[0]))?]);
            }
            if let Some(j) = cols.iter().position(|&c| c != 1) {
                return Err(Error::Extraction(format!("assignment column {} sums to {}", j + 1, cols[j])));
            }
            PointSet::new(2, &pts)?
        }
    };
    let measure = measure_of(family);
    let certified_f = discrepancy(&points, measure)?.value;
    Ok(Extracted { points, certified_f, model_f: vals[m.objective], measure })
}

// ---------------------------------------------------------------------------
// embeddings

fn require_points(p: &PointSet, dim: usize) -> Result<()> {
    p.require_dim(dim)?;
    if p.is_empty() {
        return Err(Error::invalid("cannot embed an empty point set"));
    }
    Ok(())
}

/// Indices sorted by coordinate `j`, ties by index.
fn order_by(p: &PointSet, j: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p.point(a)[j].total_cmp(&p.point(b)[j]).then(a.cmp(&b)));
    idx
}

/// Coordinates and indicators for points taken in the given order.
fn classical_values(rec: &mut SolutionRecord, pts: &[(f64, f64)]) {
    for (i, &(x, y)) in pts.iter().enumerate() {
        rec.set(format!("x_{}", 2 * i + 1), x);
        rec.set(format!("x_{}", 2 * i + 2), y);
    }
    for (i, &(_, yi)) in pts.iter().enumerate() {
        for (j, &(_, yj)) in pts.iter().enumerate() {
            let below = yi < yj || (yi == yj && i >= j);
            rec.set(format!("y_{}_{}", i + 1, j + 1), f64::from(u8::from(below)));
        }
    }
}

/// Record for the classical model: points sorted by first coordinate,
/// `y_i_j = 1` when point `i` lies on or below point `j`.
pub fn embed_classical(p: &PointSet, f: f64) -> Result<SolutionRecord> {
    require_points(p, 2)?;
    let pts: Vec<(f64, f64)> = order_by(p, 0).iter().map(|&i| (p.point(i)[0], p.point(i)[1])).collect();
    let mut rec = SolutionRecord::new("embedded point set");
    rec.set("f", f);
    classical_values(&mut rec, &pts);
    Ok(rec)
}

fn ranks(order: &[usize]) -> Vec<usize> {
    let mut r = vec![0; order.len()];
    for (rank, &i) in order.iter().enumerate() {
        r[i] = rank + 1;
    }
    r
}

/// Record for the assignment models (including extreme, periodic and
/// 4-corner): sorted coordinate lines and the permutation matrix.
pub fn embed_assignment(p: &PointSet, f: f64) -> Result<SolutionRecord> {
    require_points(p, 2)?;
    let n = p.len();
    let (ox, oy) = (order_by(p, 0), order_by(p, 1));
    let ry = ranks(&oy);
    let mut rec = SolutionRecord::new("embedded point set");
    rec.set("f", f);
    for k in 0..n {
        rec.set(format!("x_{}", k + 1), p.point(ox[k])[0]);
        rec.set(format!("y_{}", k + 1), p.point(oy[k])[1]);
    }
    rec.set(format!("x_{}", n + 1), 1.0);
    rec.set(format!("y_{}", n + 1), 1.0);
    for i in 1..=n {
        for j in 1..=n {
            rec.set(format!("a_{i}_{j}"), f64::from(u8::from(ry[ox[i - 1]] == j)));
        }
    }
    Ok(rec)
}

/// Record for the 3D assignment model, including `w_i_j = x_i·y_j`.
pub fn embed_assignment_3d(p: &PointSet, f: f64) -> Result<SolutionRecord> {
    require_points(p, 3)?;
    let n = p.len();
    let orders: Vec<Vec<usize>> = (0..3).map(|j| order_by(p, j)).collect();
    let ry = ranks(&orders[1]);
    let rz = ranks(&orders[2]);
    let mut rec = SolutionRecord::new("embedded point set");
    rec.set("f", f);
    let mut lines = vec![vec![1.0; n + 1]; 3];
    for (j, c) in ["x", "y", "z"].iter().enumerate() {
        for k in 0..n {
            lines[j][k] = p.point(orders[j][k])[j];
            rec.set(format!("{c}_{}", k + 1), lines[j][k]);
        }
        rec.set(format!("{c}_{}", n + 1), 1.0);
    }
    for i in 0..=n {
        for j in 0..=n {
            rec.set(format!("w_{}_{}", i + 1, j + 1), lines[0][i] * lines[1][j]);
        }
    }
    for i in 1..=n {
        let pt = orders[0][i - 1];
        for j in 1..=n {
            for k in 1..=n {
                let hit = ry[pt] == j && rz[pt] == k;
                rec.set(format!("a_{i}_{j}_{k}"), f64::from(u8::from(hit)));
            }
        }
    }
    Ok(rec)
}

/// Orbit `0, r, 2r, ...` modulo one, built step by step so that each wrap
/// equality holds exactly; also returns the wrap bits.
fn orbit(n: usize, r: f64) -> (Vec<f64>, Vec<bool>) {
    let mut pos = vec![0.0];
    let mut wraps = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let last = *pos.last().unwrap_or(&0.0);
        let wrap = last + r >= 1.0;
        wraps.push(wrap);
        pos.push(if wrap { last + r - 1.0 } else { last + r });
    }
    (pos, wraps)
}

fn check_param(name: &str, r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {r}")));
    }
    Ok(())
}

/// Record for the single-parameter lattice model.
pub fn embed_lattice1(n: usize, r: f64, f: f64) -> Result<SolutionRecord> {
    check_param("r", r)?;
    if n < 2 {
        return Err(Error::invalid("lattice models need n >= 2"));
    }
    let (ys, ks) = orbit(n, r);
    let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64 / n as f64, y)).collect();
    let mut rec = SolutionRecord::new(format!("lattice n={n} r={r}"));
    rec.set("f", f);
    rec.set("r", r);
    classical_values(&mut rec, &pts);
    for (i, k) in ks.iter().enumerate() {
        rec.set(format!("k_{}", i + 1), f64::from(u8::from(*k)));
    }
    Ok(rec)
}

/// Record for the double-parameter lattice model, points in generation
/// order.
pub fn embed_lattice2(n: usize, r1: f64, r2: f64, f: f64) -> Result<SolutionRecord> {
    check_param("r1", r1)?;
    check_param("r2", r2)?;
    if n < 2 {
        return Err(Error::invalid("lattice models need n >= 2"));
    }
    let (xs, hs) = orbit(n, r1);
    let (ys, ks) = orbit(n, r2);
    let pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    let mut rec = SolutionRecord::new(format!("double lattice n={n} r1={r1} r2={r2}"));
    rec.set("f", f);
    rec.set("r1", r1);
    rec.set("r2", r2);
    classical_values(&mut rec, &pts);
    for (i, (h, k)) in hs.iter().zip(&ks).enumerate() {
        rec.set(format!("h_{}", i + 1), f64::from(u8::from(*h)));
        rec.set(format!("k_{}", i + 1), f64::from(u8::from(*k)));
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::star_discrepancy;
    use crate::model::builders::*;
    use crate::pointset::{lattice1, random_set};

    const TOL: f64 = 1e-12;

    fn feasible(m: &ModelIR, s: &SolutionRecord) -> bool {
        check_solution(m, s, TOL).unwrap().feasible
    }

    #[test]
    fn star_models_agree_with_engine() {
        for seed in 0..12 {
            let n = 2 + (seed as usize % 6);
            let p = random_set(n, 2, seed).unwrap();
            let d = star_discrepancy(&p).value;
            let classical = build_classical_2d(n, DEFAULT_EPS, Extras::none()).unwrap();
            let assign = build_assignment_2d(n, DEFAULT_EPS, Extras::none()).unwrap();
            assert!(feasible(&classical, &embed_classical(&p, d + 1e-9).unwrap()), "seed {seed}");
            assert!(!feasible(&classical, &embed_classical(&p, d - 1e-6).unwrap()), "seed {seed}");
            assert!(feasible(&assign, &embed_assignment(&p, d + 1e-9).unwrap()), "seed {seed}");
            assert!(!feasible(&assign, &embed_assignment(&p, d - 1e-6).unwrap()), "seed {seed}");
        }
    }

    #[test]
    fn other_measures_agree_with_engines() {
        for seed in 0..6 {
            let n = 1 + seed as usize % 4;
            let p = random_set(n, 2, 100 + seed).unwrap();
            let models = [
                (build_extreme_model(n, DEFAULT_EPS).unwrap(), Measure::Extreme),
                (build_periodic_model(n, DEFAULT_EPS).unwrap(), Measure::Periodic),
                (build_corner4_model(n, DEFAULT_EPS).unwrap(), Measure::Corner4),
            ];
            for (m, measure) in models {
                let d = discrepancy(&p, measure).unwrap().value;
                let r = check_solution(&m, &embed_assignment(&p, d + 1e-9).unwrap(), TOL).unwrap();
                assert!(r.feasible, "{measure} seed {seed} {:?} {:?}", r.violations, p);
                assert!(!feasible(&m, &embed_assignment(&p, d - 1e-6).unwrap()), "{measure} seed {seed}");
            }
        }
    }

    #[test]
    fn single_point_values() {
        let p = PointSet::from_pairs(&[(0.5, 0.5)]).unwrap();
        let c4 = build_corner4_model(1, DEFAULT_EPS).unwrap();
        assert!(feasible(&c4, &embed_assignment(&p, 0.75).unwrap()));
        assert!(!feasible(&c4, &embed_assignment(&p, 0.75 - 1e-6).unwrap()));
        let per = build_periodic_model(1, DEFAULT_EPS).unwrap();
        for (x, y) in [(0.5, 0.5), (0.1, 0.9), (0.3, 0.2)] {
            let q = PointSet::from_pairs(&[(x, y)]).unwrap();
            assert!(feasible(&per, &embed_assignment(&q, 1.0).unwrap()));
            assert!(!feasible(&per, &embed_assignment(&q, 0.999).unwrap()));
        }
    }

    #[test]
    fn lattice_records() {
        let m = build_lattice_model(20, false).unwrap();
        let p = lattice1(20, 0.653).unwrap();
        let d = star_discrepancy(&p).value;
        let rec = embed_lattice1(20, 0.653, d + 1e-9).unwrap();
        assert!(feasible(&m, &rec));
        let ex = extract_pointset(&m, &rec).unwrap();
        assert!(ex.points.coords().iter().zip(p.coords()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((ex.certified_f - d).abs() < 1e-12);
        assert!(ex.certified_f <= ex.model_f);

        let m2 = build_lattice_model(20, true).unwrap();
        let p2 = crate::pointset::lattice2(20, 0.052, 0.737).unwrap();
        let d2 = star_discrepancy(&p2).value;
        assert!(feasible(&m2, &embed_lattice2(20, 0.052, 0.737, d2 + 1e-9).unwrap()));
        assert!(!feasible(&m2, &embed_lattice2(20, 0.052, 0.737, d2 - 1e-6).unwrap()));
    }

    #[test]
    fn assignment_extraction() {
        let n = 4;
        let m = build_assignment_2d(n, DEFAULT_EPS, Extras::none()).unwrap();
        let diag: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64 / 5.0, i as f64 / 5.0)).collect();
        let p = PointSet::from_pairs(&diag).unwrap();
        let rec = embed_assignment(&p, 1.0).unwrap();
        for i in 1..=n {
            assert_eq!(rec.get(&format!("a_{i}_{i}")), Some(1.0));
        }
        let ex = extract_pointset(&m, &rec).unwrap();
        assert_eq!(ex.points, p);

        let mut broken = rec.clone();
        broken.set("a_1_2", 1.0);
        let report = check_solution(&m, &broken, 1e-9).unwrap();
        assert!(!report.feasible);
        assert!(report.violations.iter().any(|v| v.constraint == "row_1" && (v.residual - 1.0).abs() < 1e-12));
        assert!(matches!(extract_pointset(&m, &broken), Err(Error::Extraction(_))));
    }

    #[test]
    fn three_dimensional_records() {
        let m = build_assignment_3d(3, Extras::none()).unwrap();
        let p = random_set(3, 3, 9).unwrap();
        let d = star_discrepancy(&p).value;
        assert!(feasible(&m, &embed_assignment_3d(&p, d + 1e-9).unwrap()));
        assert!(!feasible(&m, &embed_assignment_3d(&p, d - 1e-6).unwrap()));
        let ex = extract_pointset(&m, &embed_assignment_3d(&p, d).unwrap()).unwrap();
        assert!((ex.certified_f - d).abs() < 1e-12);
    }

    #[test]
    fn missing_and_fixed_variables() {
        let m = build_assignment_2d(2, DEFAULT_EPS, Extras::none()).unwrap();
        let p = random_set(2, 2, 1).unwrap();
        let mut rec = embed_assignment(&p, 1.0).unwrap();
        rec.assignment.remove("x_3");
        assert!(check_solution(&m, &rec, 1e-9).is_ok());
        rec.assignment.remove("x_1");
        assert!(matches!(check_solution(&m, &rec, 1e-9), Err(Error::IncompleteSolution(v)) if v == "x_1"));
    }

    #[test]
    fn record_formats() {
        let a = SolutionRecord::parse("# solver output\nx_1 0.25\n  f   0.5  \n\ny_1=1\n").unwrap();
        assert_eq!(a.get("x_1"), Some(0.25));
        assert_eq!(a.get("y_1"), Some(1.0));
        let b = SolutionRecord::parse(r#" { "x_1": 0.25, "f": 0.5 } "#).unwrap();
        assert_eq!(b.get("f"), Some(0.5));
        let c = SolutionRecord::parse(&a.to_json()).unwrap();
        assert_eq!(c, a);
        assert!(SolutionRecord::parse("x_1\n").is_err());
        assert!(SolutionRecord::parse("x_1 abc\n").is_err());
        assert!(SolutionRecord::parse(r#"{"x": "a"}"#).is_err());
    }
}
