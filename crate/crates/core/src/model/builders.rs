//! Builders for the discrepancy formulations.
//!
//! Box constraints come in closed (overfill) and open (underfill) families.
//! Dummy coordinates at 0 enter as constants; dummy coordinates at 1 are
//! fixed variables so that every volume term stays a product.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Atom, Builder, Expr, Family, ModelIR, Sense, VarKind};
use crate::error::{Error, Result};

/// Default minimum spacing between distinct grid lines.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Optional strengthening constraints.
///
/// `lower_bound` adds `f ≥ 1/n` where that bound is known to hold.
/// `transitivity` and `count_sum` apply to the classical model only;
/// `criticality` to the 2D assignment model only; `shift` adds the
/// spacing and boundary constraints implied by admissible shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extras {
    pub lower_bound: bool,
    pub transitivity: bool,
    pub count_sum: bool,
    pub shift: bool,
    pub criticality: bool,
}

impl Extras {
    pub const fn none() -> Self {
        Extras { lower_bound: false, transitivity: false, count_sum: false, shift: false, criticality: false }
    }

    /// Every strengthening except the criticality filter, which slows solvers down.
    pub const fn all() -> Self {
        Extras { lower_bound: true, transitivity: true, count_sum: true, shift: true, criticality: false }
    }
}

impl Default for Extras {
    fn default() -> Self {
        Extras { lower_bound: true, ..Extras::none() }
    }
}

impl FromStr for Extras {
    type Err = Error;

    /// Comma-separated flags: `none`, `default`, `all`, `h`, `trans`,
    /// `sum`, `shift`, `crit`.
    fn from_str(s: &str) -> Result<Self> {
        let mut e = Extras::none();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.to_ascii_lowercase().as_str() {
                "none" => {}
                "default" => e.lower_bound = true,
                "all" => e = Extras { criticality: e.criticality, ..Extras::all() },
                "h" | "lower-bound" => e.lower_bound = true,
                "trans" | "transitivity" => e.transitivity = true,
                "sum" | "count-sum" => e.count_sum = true,
                "shift" => e.shift = true,
                "crit" | "criticality" => e.criticality = true,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown extra '{other}' (expected none, default, all, h, trans, sum, shift, crit)"
                    )))
                }
            }
        }
        Ok(e)
    }
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::invalid(format!("model size n must be at least {min}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("spacing eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Inclusive index range that is empty when `lo > hi`.
fn span(lo: isize, hi: isize) -> impl Iterator<Item = usize> + Clone {
    (lo.max(0)..=hi).map(|i| i as usize)
}

// ---------------------------------------------------------------------------
// classical formulation

struct Classical {
    n: usize,
    shift: bool,
    x: Vec<usize>,
    y: Vec<Vec<usize>>,
}

impl Classical {
    fn x(&self, k: usize) -> Atom {
        Atom::V(self.x[k])
    }

    /// Indicator `y_ij` with the dummy rows and columns as constants.
    fn y(&self, i: usize, j: usize) -> Atom {
        let n = self.n;
        if j == 0 {
            Atom::C(if self.shift && i >= 1 { 0.0 } else { 1.0 })
        } else if i == 0 {
            Atom::C(0.0)
        } else if i == n + 1 {
            Atom::C(1.0)
        } else {
            Atom::V(self.y[i - 1][j - 1])
        }
    }
}

fn classical_core(b: &mut Builder, n: usize, eps: f64, extras: Extras, coord_lower: f64, mindist: bool) -> Classical {
    let mut x = vec![b.var("x_0", VarKind::Continuous, 1.0, 1.0)];
    for k in 1..=2 * n {
        x.push(b.var(format!("x_{k}"), VarKind::Continuous, coord_lower, 1.0));
    }
    x.push(b.var(format!("x_{}", 2 * n + 1), VarKind::Continuous, 1.0, 1.0));
    let y = (1..=n)
        .map(|i| (1..=n).map(|j| b.var(format!("y_{i}_{j}"), VarKind::Binary, 0.0, 1.0)).collect())
        .collect();
    let m = Classical { n, shift: extras.shift, x, y };
    let inv = 1.0 / n as f64;
    let f = b.f();

    for i in 1..=n {
        for j in 1..=i {
            let e = Expr::new()
                .terms(inv, (1..=i).map(|u| m.y(u, j)))
                .product(-1.0, m.x(2 * i - 1), m.x(2 * j))
                .term(-1.0, f)
                .term(1.0, m.y(i, j));
            b.add(format!("closed_{i}_{j}"), e, Sense::Le, 1.0);
        }
    }
    for i in 1..=n + 1 {
        for j in 0..i {
            let e = Expr::new()
                .terms(-inv, (0..i).map(|u| m.y(u, j)))
                .constant(inv)
                .product(1.0, m.x(2 * i - 1), m.x(2 * j))
                .term(-1.0, f)
                .term(1.0, m.y(i, j));
            b.add(format!("open_{i}_{j}"), e, Sense::Le, 1.0);
        }
    }
    if mindist {
        for i in 1..n {
            let e = Expr::new().term(1.0, m.x(2 * i + 1)).term(-1.0, m.x(2 * i - 1));
            b.add(format!("mindist_{i}"), e, Sense::Ge, eps);
        }
    }
    for i in 1..=n {
        for j in i + 1..=n {
            let gap = Expr::new().term(1.0, m.x(2 * j)).term(-1.0, m.x(2 * i)).term(-1.0, m.y(i, j));
            if extras.shift {
                b.add(format!("ygap_{i}_{j}"), gap.clone(), Sense::Ge, inv - 1.0);
            } else {
                b.add(format!("yone_{i}_{j}"), gap.clone(), Sense::Ge, eps - 1.0);
            }
            b.add(format!("ytwo_{i}_{j}"), gap, Sense::Le, 0.0);
        }
    }
    for i in 1..=n {
        for j in 1..i {
            b.add(format!("ythree_{i}_{j}"), Expr::new().term(1.0, m.y(i, j)).term(1.0, m.y(j, i)), Sense::Eq, 1.0);
        }
    }
    for i in 1..=n {
        b.add(format!("yfour_{i}"), Expr::new().term(1.0, m.y(i, i)), Sense::Eq, 1.0);
    }

    if extras.lower_bound && n >= 4 {
        b.add("lower_bound", Expr::new().term(1.0, f), Sense::Ge, inv);
    }
    if extras.transitivity {
        for i in 1..=n {
            for j in 1..=n {
                for k in 1..=n {
                    let e = Expr::new().term(1.0, m.y(i, j)).term(1.0, m.y(j, k)).term(-1.0, m.y(i, k));
                    b.add(format!("trans_up_{i}_{j}_{k}"), e.clone(), Sense::Le, 1.0);
                    b.add(format!("trans_down_{i}_{j}_{k}"), e, Sense::Ge, 0.0);
                }
            }
        }
    }
    if extras.count_sum {
        let all = (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j)));
        let e = Expr::new().terms(1.0, all.map(|(i, j)| m.y(i, j)));
        b.add("ysum", e, Sense::Eq, (n * (n + 1) / 2) as f64);
    }
    if extras.shift {
        b.add("xfirst", Expr::new().term(1.0, m.x(1)).term(-1.0, f), Sense::Eq, 0.0);
        for i in 1..=n {
            b.add(format!("ylow_{i}"), Expr::new().term(1.0, m.x(2 * i)).term(-1.0, f), Sense::Ge, 0.0);
        }
        for i in 1..n {
            let e = Expr::new().term(1.0, m.x(2 * i + 1)).term(-1.0, m.x(2 * i - 1)).term(-1.0, m.y(i, i + 1));
            b.add(format!("xgap_{i}"), e, Sense::Ge, inv - 1.0);
        }
        for i in 1..=n {
            let e = Expr::new().term(1.0, m.x(2 * i - 1)).term(-1.0, f);
            b.add(format!("xupper_{i}"), e.clone(), Sense::Le, (i - 1) as f64 * inv);
            let e = Expr::new().term(1.0, m.x(2 * i - 1)).term(1.0, f);
            b.add(format!("xlower_{i}"), e, Sense::Ge, i as f64 * inv);
        }
        for i in 1..n {
            for j in i + 1..n {
                let e = Expr::new()
                    .term(1.0, m.x(2 * j - 1))
                    .term(-1.0, m.x(2 * i - 1))
                    .term(1.0, m.x(2 * j))
                    .term(-1.0, m.x(2 * i))
                    .term(-1.0, m.y(i, j));
                b.add(format!("diag_{i}_{j}"), e, Sense::Ge, 2.0 * inv - 1.0);
            }
        }
    }
    m
}

/// Classical formulation: points `(x_{2i-1}, x_{2i})` sorted by first
/// coordinate and binaries `y_i_j` ordering the second coordinates.
pub fn build_classical_2d(n: usize, eps: f64, extras: Extras) -> Result<ModelIR> {
    check_n(n, 1)?;
    check_eps(eps)?;
    let mut b = Builder::new(Family::Classical, n);
    classical_core(&mut b, n, eps, extras, eps, true);
    Ok(b.finish())
}

/// Builds the model of any family. `eps` is ignored by the lattice and 3D
/// families, `extras` by the lattice, extreme, periodic and 4-corner ones.
pub fn build_model(family: Family, n: usize, eps: f64, extras: Extras) -> Result<ModelIR> {
    match family {
        Family::Classical => build_classical_2d(n, eps, extras),
        Family::Assign2d => build_assignment_2d(n, eps, extras),
        Family::Assign3d => build_assignment_3d(n, extras),
        Family::Lattice => build_lattice_model(n, false),
        Family::Lattice2 => build_lattice_model(n, true),
        Family::Extreme => build_extreme_model(n, eps),
        Family::Periodic => build_periodic_model(n, eps),
        Family::Corner4 => build_corner4_model(n, eps),
    }
}

/// Single-parameter (`r`) or double-parameter (`r1`, `r2`) lattice model
/// on top of the classical formulation. Wrap binaries `k_i` (and `h_i`)
/// absorb the fractional parts.
pub fn build_lattice_model(n: usize, double: bool) -> Result<ModelIR> {
    check_n(n, 2)?;
    let eps = DEFAULT_EPS;
    let family = if double { Family::Lattice2 } else { Family::Lattice };
    let mut b = Builder::new(family, n);
    let m = classical_core(&mut b, n, eps, Extras::none(), 0.0, double);
    let inv = 1.0 / n as f64;
    let (rx, ry) = if double {
        let r1 = b.var("r1", VarKind::Continuous, 0.0, 1.0);
        let r2 = b.var("r2", VarKind::Continuous, 0.0, 1.0);
        (Some(Atom::V(r1)), Atom::V(r2))
    } else {
        (None, Atom::V(b.var("r", VarKind::Continuous, 0.0, 1.0)))
    };
    let k: Vec<usize> = (1..n).map(|i| b.var(format!("k_{i}"), VarKind::Binary, 0.0, 1.0)).collect();
    let h: Vec<usize> =
        if double { (1..n).map(|i| b.var(format!("h_{i}"), VarKind::Binary, 0.0, 1.0)).collect() } else { vec![] };

    match rx {
        None => {
            for i in 1..=n {
                b.add(format!("latt_x_{i}"), Expr::new().term(1.0, m.x(2 * i - 1)), Sense::Eq, (i - 1) as f64 * inv);
            }
        }
        Some(_) => b.add("latt_x0", Expr::new().term(1.0, m.x(1)), Sense::Eq, 0.0),
    }
    b.add("latt_y0", Expr::new().term(1.0, m.x(2)), Sense::Eq, 0.0);
    for i in 1..n {
        let ki = Atom::V(k[i - 1]);
        let e = Expr::new().term(1.0, m.x(2 * i)).term(1.0, ry).term(-1.0, m.x(2 * i + 2)).term(-1.0, ki);
        b.add(format!("ywrap_{i}"), e, Sense::Eq, 0.0);
        let e = Expr::new().term(1.0, ki).term(-1.0, m.x(2 * i)).term(-1.0, ry);
        b.add(format!("ywrapbin_{i}"), e, Sense::Ge, eps - 1.0);
    }
    if let Some(rx) = rx {
        for i in 1..n {
            let hi = Atom::V(h[i - 1]);
            let e = Expr::new().term(1.0, m.x(2 * i - 1)).term(1.0, rx).term(-1.0, m.x(2 * i + 1)).term(-1.0, hi);
            b.add(format!("xwrap_{i}"), e, Sense::Eq, 0.0);
            let e = Expr::new().term(1.0, hi).term(-1.0, m.x(2 * i - 1)).term(-1.0, rx);
            b.add(format!("xwrapbin_{i}"), e, Sense::Ge, eps - 1.0);
        }
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// assignment formulations

struct Assign {
    n: usize,
    x: Vec<Atom>,
    y: Vec<Atom>,
    a: Vec<Vec<usize>>,
}

impl Assign {
    /// `a_uv` for every `u ∈ us`, `v ∈ vs` inside the real grid.
    fn cells(&self, us: impl Iterator<Item = usize> + Clone, vs: impl Iterator<Item = usize> + Clone) -> Vec<Atom> {
        let n = self.n;
        let mut out = Vec::new();
        for u in us.filter(|&u| (1..=n).contains(&u)) {
            for v in vs.clone().filter(|&v| (1..=n).contains(&v)) {
                out.push(Atom::V(self.a[u - 1][v - 1]));
            }
        }
        out
    }

    fn cell(&self, u: usize, v: usize) -> Atom {
        Atom::V(self.a[u - 1][v - 1])
    }
}

/// Coordinates `x_1..x_{n+1}`, `y_1..y_{n+1}` (the last fixed at 1),
/// binaries `a_i_j`, spacing and one-point-per-line constraints.
fn assignment_core(b: &mut Builder, n: usize, eps: f64) -> Assign {
    let axis = |c: &str, b: &mut Builder| -> Vec<Atom> {
        let mut v = vec![Atom::C(0.0)];
        for i in 1..=n {
            v.push(Atom::V(b.var(format!("{c}_{i}"), VarKind::Continuous, 0.0, 1.0)));
        }
        v.push(Atom::V(b.var(format!("{c}_{}", n + 1), VarKind::Continuous, 1.0, 1.0)));
        v
    };
    let x = axis("x", b);
    let y = axis("y", b);
    let a = (1..=n)
        .map(|i| (1..=n).map(|j| b.var(format!("a_{i}_{j}"), VarKind::Binary, 0.0, 1.0)).collect())
        .collect();
    let m = Assign { n, x, y, a };
    for (c, axis) in [("x", &m.x), ("y", &m.y)] {
        for i in 1..n {
            let e = Expr::new().term(1.0, axis[i + 1]).term(-1.0, axis[i]);
            b.add(format!("spacing_{c}_{i}"), e, Sense::Ge, eps);
        }
    }
    for j in 1..=n {
        b.add(format!("col_{j}"), Expr::new().terms(1.0, (1..=n).map(|i| m.cell(i, j))), Sense::Eq, 1.0);
    }
    for i in 1..=n {
        b.add(format!("row_{i}"), Expr::new().terms(1.0, (1..=n).map(|j| m.cell(i, j))), Sense::Eq, 1.0);
    }
    m
}

fn star_families(b: &mut Builder, m: &Assign, criticality: bool) {
    let n = m.n;
    let inv = 1.0 / n as f64;
    let f = b.f();
    // number of points on the right and top faces of the box at (i, j)
    let faces = |i: usize, j: usize| -> (f64, Vec<Atom>) {
        let mut c = 0.0;
        let mut t = Vec::new();
        if i == n + 1 {
            c += 1.0;
        } else {
            t.extend(m.cells(i..=i, 1..=j));
        }
        if j == n + 1 {
            c += 1.0;
        } else {
            t.extend(m.cells(1..=i, j..=j));
        }
        (c, t)
    };
    for i in 1..=n {
        for j in 1..=n {
            let mut e = Expr::new().terms(inv, m.cells(1..=i, 1..=j)).product(-1.0, m.x[i], m.y[j]).term(-1.0, f);
            let mut rhs = 0.0;
            if criticality {
                let (c, t) = faces(i, j);
                e = e.constant(c).terms(1.0, t);
                rhs = 2.0;
            }
            b.add(format!("closed_{i}_{j}"), e, Sense::Le, rhs);
        }
    }
    for i in 1..=n + 1 {
        for j in 1..=n + 1 {
            let mut e =
                Expr::new().terms(-inv, m.cells(1..i, 1..j)).product(1.0, m.x[i], m.y[j]).term(-1.0, f);
            let mut rhs = 0.0;
            if criticality {
                let (c, t) = faces(i, j);
                e = e.constant(c).terms(1.0, t);
                rhs = 2.0;
            }
            b.add(format!("open_{i}_{j}"), e, Sense::Le, rhs);
        }
    }
}

fn assignment_shift_extras(b: &mut Builder, m: &Assign) {
    let n = m.n;
    let inv = 1.0 / n as f64;
    let f = b.f();
    b.add("xfirst", Expr::new().term(1.0, m.x[1]).term(-1.0, f), Sense::Eq, 0.0);
    b.add("yfirst", Expr::new().term(1.0, m.y[1]).term(-1.0, f), Sense::Eq, 0.0);
    for i in 1..=n {
        for j in i + 1..=n {
            for k in 1..=n {
                // Σ_{u≤k} (a_iu − a_ju) is 1 exactly when line i is dominated by line j
                let e = Expr::new()
                    .term(1.0, m.x[j])
                    .term(-1.0, m.x[i])
                    .terms(-1.0, m.cells(i..=i, 1..=k))
                    .terms(1.0, m.cells(j..=j, 1..=k));
                b.add(format!("xgap_{i}_{j}_{k}"), e, Sense::Ge, inv - 1.0);
                let e = Expr::new()
                    .term(1.0, m.y[j])
                    .term(-1.0, m.y[i])
                    .terms(-1.0, m.cells(1..=k, i..=i))
                    .terms(1.0, m.cells(1..=k, j..=j));
                b.add(format!("ygap_{i}_{j}_{k}"), e, Sense::Ge, inv - 1.0);
            }
        }
    }
    for (c, axis) in [("x", &m.x), ("y", &m.y)] {
        for i in 2..=n {
            let e = Expr::new().term(1.0, axis[i]).term(-1.0, f);
            b.add(format!("{c}upper_{i}"), e, Sense::Le, (i - 1) as f64 * inv);
            let e = Expr::new().term(1.0, axis[i]).term(1.0, f);
            b.add(format!("{c}lower_{i}"), e, Sense::Ge, i as f64 * inv);
        }
    }
}

fn lower_bound(b: &mut Builder, n: usize) {
    let f = b.f();
    b.add("lower_bound", Expr::new().term(1.0, f), Sense::Ge, 1.0 / n as f64);
}

/// Assignment formulation: sorted grid lines `x_i`, `y_j` matched by a
/// permutation matrix `a_i_j`.
pub fn build_assignment_2d(n: usize, eps: f64, extras: Extras) -> Result<ModelIR> {
    check_n(n, 1)?;
    check_eps(eps)?;
    let mut b = Builder::new(Family::Assign2d, n);
    let m = assignment_core(&mut b, n, eps);
    star_families(&mut b, &m, extras.criticality);
    if extras.lower_bound && n >= 4 {
        lower_bound(&mut b, n);
    }
    if extras.shift {
        assignment_shift_extras(&mut b, &m);
    }
    Ok(b.finish())
}

/// Three-dimensional assignment formulation. Each trilinear volume
/// `x_i·y_j·z_k` is written as `w_i_j·z_k` with `w_i_j = x_i·y_j`.
pub fn build_assignment_3d(n: usize, extras: Extras) -> Result<ModelIR> {
    check_n(n, 1)?;
    let mut b = Builder::new(Family::Assign3d, n);
    let axis = |c: &str, b: &mut Builder| -> Vec<Atom> {
        let mut v = vec![Atom::C(0.0)];
        for i in 1..=n {
            v.push(Atom::V(b.var(format!("{c}_{i}"), VarKind::Continuous, 0.0, 1.0)));
        }
        v.push(Atom::V(b.var(format!("{c}_{}", n + 1), VarKind::Continuous, 1.0, 1.0)));
        v
    };
    let x = axis("x", &mut b);
    let y = axis("y", &mut b);
    let z = axis("z", &mut b);
    let mut w = vec![vec![Atom::C(0.0); n + 2]; n + 2];
    for i in 1..=n + 1 {
        for j in 1..=n + 1 {
            w[i][j] = Atom::V(b.var(format!("w_{i}_{j}"), VarKind::Continuous, 0.0, 1.0));
        }
    }
    let mut a = vec![vec![vec![0usize; n]; n]; n];
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                a[i - 1][j - 1][k - 1] = b.var(format!("a_{i}_{j}_{k}"), VarKind::Binary, 0.0, 1.0);
            }
        }
    }
    let cells = |imax: usize, jmax: usize, kmax: usize| -> Vec<Atom> {
        let mut out = Vec::new();
        for row in a.iter().take(imax) {
            for col in row.iter().take(jmax) {
                out.extend(col.iter().take(kmax).map(|&v| Atom::V(v)));
            }
        }
        out
    };
    let inv = 1.0 / n as f64;
    let f = b.f();
    for i in 1..=n + 1 {
        for j in 1..=n + 1 {
            let e = Expr::new().term(1.0, w[i][j]).product(-1.0, x[i], y[j]);
            b.add(format!("wdef_{i}_{j}"), e, Sense::Eq, 0.0);
        }
    }
    for (c, axis) in [("x", &x), ("y", &y), ("z", &z)] {
        for i in 1..n {
            let e = Expr::new().term(1.0, axis[i + 1]).term(-1.0, axis[i]);
            b.add(format!("order_{c}_{i}"), e, Sense::Ge, 0.0);
        }
    }
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..=n {
                let e = Expr::new().terms(inv, cells(i, j, k)).product(-1.0, w[i][j], z[k]).term(-1.0, f);
                b.add(format!("closed_{i}_{j}_{k}"), e, Sense::Le, 0.0);
            }
        }
    }
    for i in 1..=n + 1 {
        for j in 1..=n + 1 {
            for k in 1..=n + 1 {
                let e = Expr::new().terms(-inv, cells(i - 1, j - 1, k - 1)).product(1.0, w[i][j], z[k]).term(-1.0, f);
                b.add(format!("open_{i}_{j}_{k}"), e, Sense::Le, 0.0);
            }
        }
    }
    for t in 0..n {
        let pick = |axis: usize| -> Vec<Atom> {
            let mut out = Vec::new();
            for (i, plane) in a.iter().enumerate() {
                for (j, line) in plane.iter().enumerate() {
                    for (k, &v) in line.iter().enumerate() {
                        if [i, j, k][axis] == t {
                            out.push(Atom::V(v));
                        }
                    }
                }
            }
            out
        };
        for (axis, c) in ["x", "y", "z"].iter().enumerate() {
            b.add(format!("m{c}_{}", t + 1), Expr::new().terms(1.0, pick(axis)), Sense::Eq, 1.0);
        }
    }
    if extras.shift {
        for (c, axis) in [("x", &x), ("y", &y), ("z", &z)] {
            b.add(format!("{c}first"), Expr::new().term(1.0, axis[1]).term(-1.0, f), Sense::Eq, 0.0);
        }
    }
    if extras.lower_bound && n >= 3 {
        lower_bound(&mut b, n);
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// other measures

/// `(x_i − x_k)` style factor.
fn diff(hi: Atom, lo: Atom) -> [(f64, Atom); 2] {
    [(1.0, hi), (-1.0, lo)]
}

fn extreme_families(b: &mut Builder, m: &Assign) {
    let n = m.n as isize;
    let inv = 1.0 / m.n as f64;
    let f = b.f();
    for k in 0..=n {
        for i in k + 1..=n {
            for l in 0..=n {
                for j in l + 1..=n {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(inv, m.cells(span(k, i), span(l, j)))
                        .affine_product(-1.0, (0.0, &diff(m.x[iu], m.x[ku])), (0.0, &diff(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("closed_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    for k in 0..=n + 1 {
        for i in k + 1..=n + 1 {
            for l in 0..=n + 1 {
                for j in l + 1..=n + 1 {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(-inv, m.cells(span(k + 1, i - 1), span(l + 1, j - 1)))
                        .affine_product(1.0, (0.0, &diff(m.x[iu], m.x[ku])), (0.0, &diff(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("open_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
}

/// Extreme-discrepancy model: all axis-parallel grid boxes, with dummy
/// lines `x_0 = y_0 = 0`, and `f >= 1/n` for every `n`.
pub fn build_extreme_model(n: usize, eps: f64) -> Result<ModelIR> {
    check_n(n, 1)?;
    check_eps(eps)?;
    let mut b = Builder::new(Family::Extreme, n);
    let m = assignment_core(&mut b, n, eps);
    extreme_families(&mut b, &m);
    // a box shrunk onto a single point has count 1/n and volume 0
    lower_bound(&mut b, n);
    Ok(b.finish())
}

/// Periodic-discrepancy model: the extreme model plus boxes wrapping around
/// one or both axes of the torus. Open wrapping boxes may close up to a
/// single excluded line.
pub fn build_periodic_model(n: usize, eps: f64) -> Result<ModelIR> {
    check_n(n, 1)?;
    check_eps(eps)?;
    let mut b = Builder::new(Family::Periodic, n);
    let m = assignment_core(&mut b, n, eps);
    extreme_families(&mut b, &m);
    lower_bound(&mut b, n);
    let nn = n as isize;
    let inv = 1.0 / n as f64;
    let f = b.f();
    // wrapped factor 1 − hi + lo
    let wrap = |hi: Atom, lo: Atom| [(-1.0, hi), (1.0, lo)];
    let wrapped = |lo: isize, hi: isize, closed: bool| -> Vec<usize> {
        if closed {
            span(1, lo).chain(span(hi, nn)).collect()
        } else {
            span(1, lo - 1).chain(span(hi + 1, nn)).collect()
        }
    };

    for k in 1..=nn {
        for i in k + 1..=nn {
            for l in 0..=nn {
                for j in l + 1..=nn {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(inv, m.cells(wrapped(k, i, true).into_iter(), span(l, j)))
                        .affine_product(-1.0, (1.0, &wrap(m.x[iu], m.x[ku])), (0.0, &diff(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("xwrap_closed_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    for k in 1..=nn + 1 {
        for i in k..=nn + 1 {
            for l in 0..=nn {
                for j in l + 1..=nn + 1 {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(-inv, m.cells(wrapped(k, i, false).into_iter(), span(l + 1, j - 1)))
                        .affine_product(1.0, (1.0, &wrap(m.x[iu], m.x[ku])), (0.0, &diff(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("xwrap_open_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    for k in 0..=nn {
        for i in k + 1..=nn {
            for l in 1..=nn {
                for j in l + 1..=nn {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(inv, m.cells(span(k, i), wrapped(l, j, true).into_iter()))
                        .affine_product(-1.0, (0.0, &diff(m.x[iu], m.x[ku])), (1.0, &wrap(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("ywrap_closed_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    for k in 0..=nn {
        for i in k + 1..=nn + 1 {
            for l in 1..=nn + 1 {
                for j in l..=nn + 1 {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(-inv, m.cells(span(k + 1, i - 1), wrapped(l, j, false).into_iter()))
                        .affine_product(1.0, (0.0, &diff(m.x[iu], m.x[ku])), (1.0, &wrap(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("ywrap_open_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    for k in 1..=nn {
        for i in k + 1..=nn {
            for l in 1..=nn {
                for j in l + 1..=nn {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(inv, m.cells(wrapped(k, i, true).into_iter(), wrapped(l, j, true).into_iter()))
                        .affine_product(-1.0, (1.0, &wrap(m.x[iu], m.x[ku])), (1.0, &wrap(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("xywrap_closed_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    for k in 1..=nn + 1 {
        for i in k..=nn + 1 {
            for l in 1..=nn + 1 {
                for j in l..=nn + 1 {
                    let (ku, iu, lu, ju) = (k as usize, i as usize, l as usize, j as usize);
                    let e = Expr::new()
                        .terms(-inv, m.cells(wrapped(k, i, false).into_iter(), wrapped(l, j, false).into_iter()))
                        .affine_product(1.0, (1.0, &wrap(m.x[iu], m.x[ku])), (1.0, &wrap(m.y[ju], m.y[lu])))
                        .term(-1.0, f);
                    b.add(format!("xywrap_open_{k}_{i}_{l}_{j}"), e, Sense::Le, 0.0);
                }
            }
        }
    }
    Ok(b.finish())
}

/// 4-corner model: the assignment model plus the star families of the
/// three reflected sets `(1−x, y)`, `(1−x, 1−y)` and `(x, 1−y)`.
pub fn build_corner4_model(n: usize, eps: f64) -> Result<ModelIR> {
    check_n(n, 1)?;
    check_eps(eps)?;
    let mut b = Builder::new(Family::Corner4, n);
    let m = assignment_core(&mut b, n, eps);
    star_families(&mut b, &m, false);
    let nn = n as isize;
    let inv = 1.0 / n as f64;
    let f = b.f();
    let flip = |a: Atom| [(-1.0, a)];
    let keep = |a: Atom| [(1.0, a)];
    // reflected closed boxes [x_i,1]×[0,y_j], [x_i,1]×[y_j,1], [0,x_i]×[y_j,1]
    for id in 2..=4u8 {
        let (fx, fy) = (id != 4, id != 2);
        for i in 1..=nn {
            for j in 1..=nn {
                let us = if fx { span(i, nn) } else { span(1, i) };
                let vs = if fy { span(j, nn) } else { span(1, j) };
                let (xi, yj) = (m.x[i as usize], m.y[j as usize]);
                let xf = if fx { (1.0, &flip(xi)[..]) } else { (0.0, &keep(xi)[..]) };
                let yf = if fy { (1.0, &flip(yj)[..]) } else { (0.0, &keep(yj)[..]) };
                let e = Expr::new().terms(inv, m.cells(us, vs)).affine_product(-1.0, xf, yf).term(-1.0, f);
                b.add(format!("corner{id}_closed_{i}_{j}"), e, Sense::Le, 0.0);
            }
        }
        // open boxes reach the far boundary through the dummy line at 0
        let irange = if fx { 0..=nn } else { 1..=nn + 1 };
        for i in irange {
            let jrange = if fy { 0..=nn } else { 1..=nn + 1 };
            for j in jrange {
                let us = if fx { span(i + 1, nn) } else { span(1, i - 1) };
                let vs = if fy { span(j + 1, nn) } else { span(1, j - 1) };
                let (xi, yj) = (m.x[i as usize], m.y[j as usize]);
                let xf = if fx { (1.0, &flip(xi)[..]) } else { (0.0, &keep(xi)[..]) };
                let yf = if fy { (1.0, &flip(yj)[..]) } else { (0.0, &keep(yj)[..]) };
                let e = Expr::new().terms(-inv, m.cells(us, vs)).affine_product(1.0, xf, yf).term(-1.0, f);
                b.add(format!("corner{id}_open_{i}_{j}"), e, Sense::Le, 0.0);
            }
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(m: &ModelIR, fam: &str) -> usize {
        m.family_count(fam)
    }

    #[test]
    fn classical_census() {
        let m = build_classical_2d(2, DEFAULT_EPS, Extras::none()).unwrap();
        assert_eq!(count(&m, "closed"), 3);
        assert_eq!(count(&m, "open"), 6);
        let coords = m
            .variables
            .iter()
            .filter(|v| v.name.starts_with("x_") && v.fixed().is_none())
            .count();
        assert_eq!(coords, 4);
        assert_eq!(m.variables.iter().filter(|v| v.kind == VarKind::Binary).count(), 4);
        assert!(m.var_index("f").is_some());
        for n in 1..=10 {
            let m = build_classical_2d(n, DEFAULT_EPS, Extras::none()).unwrap();
            assert_eq!(count(&m, "closed"), n * (n + 1) / 2);
            assert_eq!(count(&m, "open"), (n + 1) * (n + 2) / 2);
        }
    }

    #[test]
    fn classical_extras() {
        let m = build_classical_2d(5, DEFAULT_EPS, Extras::default()).unwrap();
        let c = m.constraint("lower_bound").unwrap();
        assert_eq!((c.sense, c.rhs), (Sense::Ge, 0.2));
        assert!(build_classical_2d(3, DEFAULT_EPS, Extras::default()).unwrap().constraint("lower_bound").is_none());
        let all = build_classical_2d(3, DEFAULT_EPS, Extras::all()).unwrap();
        assert_eq!(count(&all, "trans_up"), 27);
        assert_eq!(all.constraint("ysum").unwrap().rhs, 6.0);
        assert!(all.constraint("xfirst").is_some());
        assert_eq!(count(&all, "yone"), 0);
        assert_eq!(count(&all, "ygap"), 3);
        assert!(build_classical_2d(0, DEFAULT_EPS, Extras::none()).is_err());
        assert!(build_classical_2d(2, 0.0, Extras::none()).is_err());
    }

    #[test]
    fn assignment_census() {
        let m = build_assignment_2d(2, DEFAULT_EPS, Extras::none()).unwrap();
        assert_eq!(count(&m, "closed"), 4);
        assert_eq!(count(&m, "open"), 9);
        let m = build_assignment_2d(3, DEFAULT_EPS, Extras::none()).unwrap();
        assert_eq!((count(&m, "row"), count(&m, "col")), (3, 3));
        for n in 1..=10 {
            let m = build_assignment_2d(n, DEFAULT_EPS, Extras::none()).unwrap();
            assert_eq!(count(&m, "closed"), n * n);
            assert_eq!(count(&m, "open"), (n + 1) * (n + 1));
        }
        let s = Extras { shift: true, ..Extras::none() };
        let m = build_assignment_2d(3, DEFAULT_EPS, s).unwrap();
        let x1 = m.constraint("xfirst").unwrap();
        assert_eq!(x1.sense, Sense::Eq);
        assert_eq!(x1.linear.len(), 2);
        assert!(m.constraint("yfirst").is_some());
    }

    #[test]
    fn assignment_3d_census() {
        let m = build_assignment_3d(1, Extras::none()).unwrap();
        assert_eq!((count(&m, "closed"), count(&m, "open")), (1, 8));
        let m = build_assignment_3d(2, Extras::none()).unwrap();
        assert_eq!(m.variables.iter().filter(|v| v.name.starts_with("w_")).count(), 9);
        let m = build_assignment_3d(3, Extras::default()).unwrap();
        assert_eq!(m.constraint("lower_bound").unwrap().rhs, 1.0 / 3.0);
        for n in 1..=4 {
            let m = build_assignment_3d(n, Extras::none()).unwrap();
            assert_eq!(count(&m, "closed"), n * n * n);
            assert_eq!(count(&m, "open"), (n + 1).pow(3));
        }
    }

    #[test]
    fn lattice_census() {
        let m = build_lattice_model(3, false).unwrap();
        let k: Vec<&str> = m.variables.iter().filter(|v| v.name.starts_with("k_")).map(|v| v.name.as_str()).collect();
        assert_eq!(k, ["k_1", "k_2"]);
        assert!(m.var_index("r").is_some());
        let d = build_lattice_model(3, true).unwrap();
        assert!(d.var_index("r1").is_some() && d.var_index("r2").is_some());
        assert_eq!(count(&d, "xwrap"), 2);
        assert!(build_lattice_model(1, false).is_err());
    }

    #[test]
    fn other_measure_census() {
        for n in 1..=5 {
            let pairs = |m: usize| m * (m + 1) / 2;
            let e = build_extreme_model(n, DEFAULT_EPS).unwrap();
            assert_eq!(count(&e, "closed"), pairs(n).pow(2));
            assert_eq!(count(&e, "open"), pairs(n + 1).pow(2));
            assert_eq!(e.constraint("lower_bound").unwrap().rhs, 1.0 / n as f64);
            let p = build_periodic_model(n, DEFAULT_EPS).unwrap();
            assert!(p.constraints.len() > e.constraints.len());
            assert_eq!(count(&p, "xywrap_open"), pairs(n + 1).pow(2));
            let c = build_corner4_model(n, DEFAULT_EPS).unwrap();
            for id in 2..=4 {
                assert_eq!(count(&c, &format!("corner{id}_closed")), n * n);
                assert_eq!(count(&c, &format!("corner{id}_open")), (n + 1) * (n + 1));
            }
        }
    }

    #[test]
    fn extras_parse() {
        assert_eq!("none".parse::<Extras>().unwrap(), Extras::none());
        assert_eq!("".parse::<Extras>().unwrap(), Extras::none());
        assert_eq!("h".parse::<Extras>().unwrap(), Extras::default());
        let e: Extras = "h, trans,sum,shift,crit".parse().unwrap();
        assert!(e.lower_bound && e.transitivity && e.count_sum && e.shift && e.criticality);
        assert_eq!("all".parse::<Extras>().unwrap(), Extras::all());
        assert!("bogus".parse::<Extras>().is_err());
    }

    #[test]
    fn dispatch_tags_every_family() {
        for family in Family::ALL {
            let m = build_model(family, 3, DEFAULT_EPS, Extras::default()).unwrap();
            assert_eq!(m.family, Some(family));
            assert_eq!(m.n, 3);
        }
    }
}
