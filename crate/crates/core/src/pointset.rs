//! Point sets in the unit cube, their generators, grids and file formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The golden ratio at full double precision.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// `n` points in `[0,1]^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a set from explicit points, checking the unit-cube invariant.
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a set from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not form a non-empty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(&c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::OutOfUnitCube(c));
        }
        Ok(Self { dim, coords })
    }

    /// Builds a 2D set from `(x, y)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let coords = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
        Self::from_flat(2, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false: a valid set has at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The `j`-th coordinate of every point, in point order.
    pub fn axis(&self, j: usize) -> Vec<f64> {
        self.points().map(|p| p[j]).collect()
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn set_coord(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitCube(value));
        }
        self.coords[i * self.dim + j] = value;
        Ok(())
    }

    pub(crate) fn require_dim(&self, expected: usize) -> Result<()> {
        if self.dim != expected {
            return Err(Error::UnsupportedDimension {
                found: self.dim,
                expected: if expected == 2 { "2" } else { "3" },
            });
        }
        Ok(())
    }
}

/// Per-axis sorted unique coordinates and their closures with 1 appended.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub gamma: Vec<Vec<f64>>,
    pub gamma_bar: Vec<Vec<f64>>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }
}

fn sorted_unique(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// Extracts the coordinate grid of a point set.
pub fn grid_of(p: &PointSet) -> Grid {
    let gamma: Vec<Vec<f64>> = (0..p.dim()).map(|j| sorted_unique(p.axis(j))).collect();
    let gamma_bar = gamma
        .iter()
        .map(|g| {
            let mut g = g.clone();
            if g.last() != Some(&1.0) {
                g.push(1.0);
            }
            g
        })
        .collect();
    Grid { gamma, gamma_bar }
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

fn check_param(name: &str, r: f64) -> Result<()> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::invalid(format!("{name} = {r} is outside [0,1)")));
    }
    Ok(())
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("a point set needs at least one point"));
    }
    Ok(())
}

/// The Fibonacci set `{(i/n, frac(i·φ)) : i = 0..n-1}`.
pub fn fibonacci_set(n: usize) -> Result<PointSet> {
    check_count(n)?;
    let coords = (0..n)
        .flat_map(|i| [i as f64 / n as f64, frac(i as f64 * GOLDEN_RATIO)])
        .collect();
    PointSet::from_flat(2, coords)
}

/// The rank-1 lattice `{(i/n, frac(i·r))}`.
pub fn lattice1(n: usize, r: f64) -> Result<PointSet> {
    check_count(n)?;
    check_param("r", r)?;
    let coords = (0..n)
        .flat_map(|i| [i as f64 / n as f64, frac(i as f64 * r)])
        .collect();
    PointSet::from_flat(2, coords)
}

/// The two-parameter lattice `{(frac(i·r1), frac(i·r2))}`.
pub fn lattice2(n: usize, r1: f64, r2: f64) -> Result<PointSet> {
    check_count(n)?;
    check_param("r1", r1)?;
    check_param("r2", r2)?;
    let coords = (0..n)
        .flat_map(|i| [frac(i as f64 * r1), frac(i as f64 * r2)])
        .collect();
    PointSet::from_flat(2, coords)
}

/// Direction numbers for the first two Sobol' dimensions.
///
/// Dimension 1 is the van der Corput sequence in base 2; dimension 2 uses the
/// degree-1 primitive polynomial `x + 1` with initial value `m_1 = 1`, the
/// usual Joe–Kuo initialisation.
fn sobol_directions() -> [[u32; 32]; 2] {
    let mut v = [[0u32; 32]; 2];
    for k in 0..32 {
        v[0][k] = 1 << (31 - k);
    }
    v[1][0] = 1 << 31;
    for k in 1..32 {
        v[1][k] = v[1][k - 1] ^ (v[1][k - 1] >> 1);
    }
    v
}

/// The first `n` points of the unscrambled 2D Sobol' sequence.
pub fn sobol2d(n: usize) -> Result<PointSet> {
    check_count(n)?;
    if n as u64 > 1 << 32 {
        return Err(Error::invalid("sobol2d supports at most 2^32 points"));
    }
    let v = sobol_directions();
    let scale = 1.0 / 4_294_967_296.0;
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n as u64 {
        for dim in &v {
            let mut acc = 0u32;
            let mut bits = i;
            let mut k = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    acc ^= dim[k];
                }
                bits >>= 1;
                k += 1;
            }
            coords.push(acc as f64 * scale);
        }
    }
    PointSet::from_flat(2, coords)
}

/// Uniform random points, deterministic in `seed`.
pub fn random_set(n: usize, dim: usize, seed: u64) -> Result<PointSet> {
    check_count(n)?;
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension { found: dim, expected: "2 or 3" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    PointSet::from_flat(dim, coords)
}

/// The three reflections `(1-x, y)`, `(1-x, 1-y)` and `(x, 1-y)`.
pub fn reflections(p: &PointSet) -> Result<(PointSet, PointSet, PointSet)> {
    p.require_dim(2)?;
    let map = |fx: bool, fy: bool| {
        let coords = p
            .points()
            .flat_map(|q| {
                [
                    if fx { 1.0 - q[0] } else { q[0] },
                    if fy { 1.0 - q[1] } else { q[1] },
                ]
            })
            .collect();
        PointSet { dim: 2, coords }
    };
    Ok((map(true, false), map(true, true), map(false, true)))
}

#[derive(Serialize, Deserialize)]
struct PointSetJson {
    dim: usize,
    points: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonInput {
    Tagged(PointSetJson),
    Bare(Vec<Vec<f64>>),
}

impl Serialize for PointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointSetJson { dim: self.dim, points: self.to_vecs() }.serialize(s)
    }
}

/// Parses the CSV point format: one point per row, `#` comments, optional header.
pub fn parse_points_csv(text: &str) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut dim = 0usize;
    let mut coords = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            // a non-numeric first row is a header
            Err(_) if first && record.iter().any(|f| f.parse::<f64>().is_err()) => {
                first = false;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse { line, message: format!("bad coordinate: {e}") })
            }
        };
        first = false;
        if dim == 0 {
            dim = row.len();
        } else if row.len() != dim {
            return Err(Error::Parse {
                line,
                message: format!("expected {dim} coordinates, found {}", row.len()),
            });
        }
        if let Some(&value) = row.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Domain { line, value });
        }
        coords.extend(row);
    }
    if coords.is_empty() {
        return Err(Error::Parse { line: 0, message: "no points found".into() });
    }
    PointSet::from_flat(dim, coords)
}

/// Parses a JSON point set: either `{"dim": d, "points": [[..], ..]}` or a bare array.
pub fn parse_points_json(text: &str) -> Result<PointSet> {
    let input: JsonInput = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let (dim, points) = match input {
        JsonInput::Tagged(p) => (p.dim, p.points),
        JsonInput::Bare(points) => (points.first().map_or(0, Vec::len), points),
    };
    for (i, p) in points.iter().enumerate() {
        if let Some(&value) = p.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Domain { line: i as u64 + 1, value });
        }
    }
    PointSet::new(dim, &points)
}

/// Renders a set in the CSV point format with round-trip exact decimals.
pub fn format_points_csv(p: &PointSet) -> String {
    let mut out = format!("# n={} dim={}\n", p.len(), p.dim());
    for q in p.points() {
        let row: Vec<String> = q.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a point file; `.json` files use the JSON format, everything else CSV.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if is_json(path) {
        parse_points_json(&text)
    } else {
        parse_points_csv(&text)
    }
}

/// Writes a point file in the format implied by its extension.
pub fn write_points(p: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = if is_json(path) {
        serde_json::to_string_pretty(p).map_err(|e| Error::Serialization(e.to_string()))?
    } else {
        format_points_csv(p)
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_small_sets() {
        assert!(matches!(fibonacci_set(0), Err(Error::InvalidArgument(_))));
        assert_eq!(fibonacci_set(1).unwrap().to_vecs(), vec![vec![0.0, 0.0]]);
        let p = fibonacci_set(2).unwrap();
        assert_eq!(p.point(1)[0], 0.5);
        assert!((p.point(1)[1] - (GOLDEN_RATIO - 1.0)).abs() < 1e-15);
        let p = fibonacci_set(3).unwrap();
        assert!((p.point(2)[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.point(2)[1] - (2.0 * GOLDEN_RATIO - 3.0)).abs() < 1e-15);
        assert!((p.point(2)[1] - 0.236_067_977_499_789_7).abs() < 1e-12);
    }

    #[test]
    fn lattice_examples() {
        assert!(lattice1(4, 0.0).unwrap().axis(1).iter().all(|&y| y == 0.0));
        assert_eq!(lattice1(4, 0.25).unwrap().axis(1), vec![0.0, 0.25, 0.5, 0.75]);
        let p = lattice1(20, 0.653).unwrap();
        assert_eq!(p.point(1), &[0.05, 0.653]);
        assert!(matches!(lattice1(4, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(lattice1(4, -0.1), Err(Error::InvalidArgument(_))));

        assert!(lattice2(3, 0.0, 0.0).unwrap().points().all(|q| q == [0.0, 0.0]));
        assert_eq!(lattice2(20, 0.052, 0.737).unwrap().point(1), &[0.052, 0.737]);
        assert_eq!(lattice2(2, 0.5, 0.5).unwrap().to_vecs(), vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
        assert!(lattice2(2, 0.5, 1.5).is_err());
    }

    #[test]
    fn lattice_agrees_with_fibonacci() {
        for n in [1, 5, 13, 100, 1000] {
            let f = fibonacci_set(n).unwrap();
            let l = lattice1(n, GOLDEN_RATIO - 1.0).unwrap();
            for (a, b) in f.coords().iter().zip(l.coords()) {
                // frac(i·φ) and frac(i·(φ-1)) differ by one rounding of i·φ
                assert!((a - b).abs() <= 4.0 * f64::EPSILON * n as f64, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sobol_prefix() {
        assert_eq!(sobol2d(1).unwrap().to_vecs(), vec![vec![0.0, 0.0]]);
        assert_eq!(sobol2d(2).unwrap().point(1), &[0.5, 0.5]);
        let p = sobol2d(4).unwrap().to_vecs();
        assert!(p.contains(&vec![0.75, 0.25]));
        assert!(p.contains(&vec![0.25, 0.75]));
        // every dyadic elementary interval of size 1/8 holds one point
        let p = sobol2d(8).unwrap();
        let mut xs: Vec<u32> = p.axis(0).iter().map(|x| (x * 8.0) as u32).collect();
        let mut ys: Vec<u32> = p.axis(1).iter().map(|y| (y * 8.0) as u32).collect();
        xs.sort();
        ys.sort();
        assert_eq!(xs, (0..8).collect::<Vec<_>>());
        assert_eq!(ys, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn random_sets_are_deterministic() {
        assert_eq!(random_set(5, 2, 7).unwrap(), random_set(5, 2, 7).unwrap());
        assert_ne!(random_set(5, 2, 7).unwrap(), random_set(5, 2, 8).unwrap());
        let p = random_set(1, 3, 0).unwrap();
        assert_eq!((p.len(), p.dim()), (1, 3));
        let mut xs = random_set(100, 2, 1).unwrap().axis(0);
        xs.sort_by(f64::total_cmp);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!(random_set(3, 4, 0).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = grid_of(&PointSet::from_pairs(&[(0.5, 0.5)]).unwrap());
        assert_eq!(g.gamma[0], vec![0.5]);
        assert_eq!(g.gamma_bar[0], vec![0.5, 1.0]);
        let g = grid_of(&fibonacci_set(2).unwrap());
        assert_eq!(g.gamma[0], vec![0.0, 0.5]);
        assert_eq!(g.gamma_bar[0], vec![0.0, 0.5, 1.0]);
        let g = grid_of(&PointSet::from_pairs(&[(0.3, 0.1), (0.3, 0.9)]).unwrap());
        assert_eq!(g.gamma[0], vec![0.3]);
        let g = grid_of(&PointSet::from_pairs(&[(1.0, 0.2)]).unwrap());
        assert_eq!(g.gamma_bar[0], vec![1.0]);
    }

    #[test]
    fn reflection_examples() {
        let c = PointSet::from_pairs(&[(0.5, 0.5)]).unwrap();
        let (a, b, d) = reflections(&c).unwrap();
        assert!(a == c && b == c && d == c);
        let p = PointSet::from_pairs(&[(0.2, 0.7)]).unwrap();
        let (p2, p3, p4) = reflections(&p).unwrap();
        assert!((p2.point(0)[0] - 0.8).abs() < 1e-15 && p2.point(0)[1] == 0.7);
        assert!((p3.point(0)[0] - 0.8).abs() < 1e-15 && (p3.point(0)[1] - 0.3).abs() < 1e-15);
        assert!(p4.point(0)[0] == 0.2 && (p4.point(0)[1] - 0.3).abs() < 1e-15);
        assert!(matches!(
            reflections(&random_set(3, 3, 0).unwrap()),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn csv_parsing() {
        let p = parse_points_csv("x,y,z\n# comment\n0.5,0.5,0.5\n").unwrap();
        assert_eq!(p.dim(), 3);
        match parse_points_csv("1.5,0.2\n") {
            Err(Error::Domain { line, value }) => assert_eq!((line, value), (1, 1.5)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_points_csv("0.1,0.2\n0.3,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_points_csv("0.1,0.2\n0.3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_points_csv("# nothing\n").is_err());
    }

    #[test]
    fn json_parsing() {
        let p = parse_points_json(r#"{"dim":2,"points":[[0.1,0.2],[0.3,0.4]]}"#).unwrap();
        assert_eq!(p.len(), 2);
        let q = parse_points_json("[[0.1,0.2],[0.3,0.4]]").unwrap();
        assert_eq!(p, q);
        assert!(matches!(parse_points_json("[[0.1,2.0]]"), Err(Error::Domain { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = fibonacci_set(3).unwrap();
        for name in ["p.csv", "p.json"] {
            let path = dir.path().join(name);
            write_points(&p, &path).unwrap();
            assert_eq!(read_points(&path).unwrap(), p);
        }
        let missing = read_points(dir.path().join("missing.csv"));
        assert!(matches!(missing, Err(Error::Io { .. })));
    }
}
