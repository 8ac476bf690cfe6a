//! Min-max placement of grid lines for a fixed permutation.
//!
//! For a permutation `σ` (point `u` sits in column `u` and row `σ(u)`), the
//! star discrepancy of the set `{(x_u, y_σ(u))}` with increasing grid lines is
//!
//! ```text
//! max( C_ij/n − x_i·y_j  over i, j ≤ n,   x_i·y_j − O_ij/n  over i, j ≤ n+1 )
//! ```
//!
//! with `x_{n+1} = y_{n+1} = 1`. Fixing either block of coordinates makes this
//! an LP. Alternating the two LPs can stall at non-stationary points, so each
//! round also tries a trust-region step on the joint linearisation, accepted
//! only when it lowers the true objective.

use crate::discrepancy::{corner4_discrepancy, star_discrepancy, Measure};
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::search::lp::{lp_solve, LpProblem, Sense};

/// Default minimum spacing between consecutive grid lines.
pub const DEFAULT_SPACING: f64 = 1e-7;

/// One grid-line factor of a box volume: `1`, `v_k` or `1 − v_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Factor {
    var: Option<usize>,
    flip: bool,
}

impl Factor {
    fn eval(self, v: &[f64]) -> f64 {
        match self.var {
            None => 1.0,
            Some(k) if self.flip => 1.0 - v[k],
            Some(k) => v[k],
        }
    }

    /// `(constant, slope)` with the factor equal to `constant + slope · v_k`.
    fn affine(self) -> (f64, f64) {
        match self.var {
            None => (1.0, 0.0),
            Some(_) if self.flip => (1.0, -1.0),
            Some(_) => (0.0, 1.0),
        }
    }
}

/// `count − X·Y ≤ f` when `over`, else `X·Y − count ≤ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BoxRow {
    x: Factor,
    y: Factor,
    count: f64,
    over: bool,
}

impl BoxRow {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let vol = self.x.eval(x) * self.y.eval(y);
        if self.over {
            self.count - vol
        } else {
            vol - self.count
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerProblem {
    sigma: Vec<usize>,
    measure: Measure,
    /// `closed[(i-1)*n + (j-1)] = #{u ≤ i : σ(u) ≤ j}` for `i, j ∈ 1..=n`.
    closed: Vec<usize>,
    /// `open[i*(n+2) + j] = #{u < i : σ(u) < j}` for `i, j ∈ 1..=n+1`.
    open: Vec<usize>,
    rows: Vec<BoxRow>,
    eps: f64,
}

fn star_counts(sigma: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = sigma.len();
    let mut closed = vec![0; n * n];
    for i in 1..=n {
        for j in 1..=n {
            closed[(i - 1) * n + (j - 1)] = (0..i).filter(|&u| sigma[u] < j).count();
        }
    }
    let w = n + 2;
    let mut open = vec![0; w * w];
    for i in 1..=n + 1 {
        for j in 1..=n + 1 {
            open[i * w + j] = (0..i - 1).filter(|&u| sigma[u] + 1 < j).count();
        }
    }
    (closed, open)
}

impl InnerProblem {
    /// `sigma[u]` is the 0-based row of the point in 0-based column `u`.
    pub fn new(sigma: Vec<usize>, eps: f64) -> Result<Self> {
        Self::with_measure(sigma, eps, Measure::Star)
    }

    /// Star rows, or the star rows of all four corner frames for `Corner4`.
    pub fn with_measure(sigma: Vec<usize>, eps: f64, measure: Measure) -> Result<Self> {
        let n = sigma.len();
        if n == 0 {
            return Err(Error::invalid("permutation must be non-empty"));
        }
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s >= n || seen[s] {
                return Err(Error::invalid(format!("{sigma:?} is not a permutation")));
            }
            seen[s] = true;
        }
        if !(eps >= 0.0 && eps * (n as f64) < 1.0) {
            return Err(Error::invalid(format!("spacing {eps} is not usable for n = {n}")));
        }
        let frames: &[(bool, bool)] = match measure {
            Measure::Star => &[(false, false)],
            Measure::Corner4 => &[(false, false), (true, false), (true, true), (false, true)],
            other => return Err(Error::UnsupportedMeasure(other.to_string())),
        };
        let mut rows = Vec::new();
        for &(fx, fy) in frames {
            // in a reflected frame, column k holds original column n-1-k
            let frame_sigma: Vec<usize> = (0..n)
                .map(|k| {
                    let u = if fx { n - 1 - k } else { k };
                    if fy { n - 1 - sigma[u] } else { sigma[u] }
                })
                .collect();
            let (closed, open) = star_counts(&frame_sigma);
            let factor = |i: usize, flip: bool| Factor {
                var: (i <= n).then(|| if flip { n - i } else { i - 1 }),
                flip,
            };
            let nf = n as f64;
            for i in 1..=n + 1 {
                for j in 1..=n + 1 {
                    let (x, y) = (factor(i, fx), factor(j, fy));
                    if i <= n && j <= n {
                        let count = closed[(i - 1) * n + (j - 1)] as f64 / nf;
                        rows.push(BoxRow { x, y, count, over: true });
                    }
                    let count = open[i * (n + 2) + j] as f64 / nf;
                    rows.push(BoxRow { x, y, count, over: false });
                }
            }
        }
        let (closed, open) = star_counts(&sigma);
        Ok(InnerProblem { sigma, measure, closed, open, rows, eps })
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    /// Closed count `C_ij`, 1-based.
    pub fn closed_count(&self, i: usize, j: usize) -> usize {
        self.closed[(i - 1) * self.n() + (j - 1)]
    }

    /// Open count `O_ij`, 1-based, `i, j ≤ n + 1`.
    pub fn open_count(&self, i: usize, j: usize) -> usize {
        self.open[i * (self.n() + 2) + j]
    }

    /// The point set induced by grid lines `x` and `y`.
    pub fn points(&self, x: &[f64], y: &[f64]) -> Result<PointSet> {
        let pairs: Vec<(f64, f64)> = (0..self.n()).map(|u| (x[u], y[self.sigma[u]])).collect();
        PointSet::from_pairs(&pairs)
    }

    /// The min-max objective at the given grid lines.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.value(x, y)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact discrepancy of the induced set under this problem's measure.
    pub fn certify(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let p = self.points(x, y)?;
        Ok(match self.measure {
            Measure::Corner4 => corner4_discrepancy(&p)?.value,
            _ => star_discrepancy(&p).value,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOptions {
    pub max_rounds: usize,
    /// Stop once a round improves by less than this.
    pub tol: f64,
    /// Abandon after `prune_after` rounds if `f > prune_factor · incumbent`.
    pub prune_after: usize,
    pub prune_factor: f64,
    pub incumbent: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            max_rounds: 200,
            tol: 1e-9,
            prune_after: 5,
            prune_factor: 2.0,
            incumbent: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Exact star discrepancy of the induced set.
    pub f: f64,
    /// Objective after each half-step, starting with the first x-solve.
    pub history: Vec<f64>,
    pub pruned: bool,
}

/// Alternating LP descent from the row coordinates `start`.
pub fn inner_minmax(ip: &InnerProblem, start: &[f64]) -> Result<InnerResult> {
    inner_minmax_with(ip, start, &InnerOptions::default())
}

pub fn inner_minmax_with(ip: &InnerProblem, start: &[f64], opts: &InnerOptions) -> Result<InnerResult> {
    let n = ip.n();
    if start.len() != n {
        return Err(Error::invalid(format!("start has {} coordinates, expected {n}", start.len())));
    }
    let increasing = start.windows(2).all(|w| w[0] < w[1]);
    if !increasing || start[0] <= 0.0 || start[n - 1] >= 1.0 {
        return Err(Error::invalid("start must be strictly increasing inside (0,1)"));
    }
    let mut y = start.to_vec();
    let (mut x, mut f) = solve_block(ip, &y, Block::X)?;
    let mut history = vec![f];
    let mut radius = 0.05;
    let mut pruned = false;
    for round in 0..opts.max_rounds {
        let before = f;
        let (ny, fy) = solve_block(ip, &x, Block::Y)?;
        if fy <= f {
            y = ny;
            f = fy;
        }
        history.push(f);
        let (nx, fx) = solve_block(ip, &y, Block::X)?;
        if fx <= f {
            x = nx;
            f = fx;
        }
        history.push(f);
        while radius > 1e-10 {
            match joint_step(ip, &x, &y, radius) {
                Some((jx, jy)) => {
                    let fj = ip.objective(&jx, &jy);
                    if fj < f - 1e-15 {
                        x = jx;
                        y = jy;
                        f = fj;
                        radius = (radius * 2.0).min(0.25);
                        break;
                    }
                    radius *= 0.25;
                }
                None => radius *= 0.25,
            }
        }
        history.push(f);
        if round + 1 >= opts.prune_after && f > opts.prune_factor * opts.incumbent {
            pruned = true;
            break;
        }
        if before - f < opts.tol && radius <= 1e-10 {
            break;
        }
        if before - f < opts.tol {
            radius = radius.max(1e-4);
        }
    }
    let f = ip.certify(&x, &y)?;
    Ok(InnerResult { x, y, f, history, pruned })
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    X,
    Y,
}

/// Optimises one block of grid lines with the other held fixed.
fn solve_block(ip: &InnerProblem, fixed: &[f64], block: Block) -> Result<(Vec<f64>, f64)> {
    let n = ip.n();
    let fv = n;
    let mut obj = vec![0.0; n + 1];
    obj[fv] = 1.0;
    let mut lower = vec![0.0; n + 1];
    let mut upper = vec![1.0; n + 1];
    upper[fv] = f64::INFINITY;
    lower[fv] = f64::NEG_INFINITY;
    let mut lp = LpProblem::new(obj, lower, upper);
    let mut f_floor = f64::NEG_INFINITY;
    for r in &ip.rows {
        let (free, other) = match block {
            Block::X => (r.x, r.y),
            Block::Y => (r.y, r.x),
        };
        let c = other.eval(fixed);
        let sign = if r.over { -1.0 } else { 1.0 };
        // sign·c·(a + b·v) − sign·count ≤ f
        let (a, b) = free.affine();
        match free.var {
            Some(k) if b * c != 0.0 => {
                let mut row = vec![0.0; n + 1];
                row[k] = sign * c * b;
                row[fv] = -1.0;
                lp.add_row(row, Sense::Le, sign * r.count - sign * c * a);
            }
            _ => {
                let v = free.var.map_or(1.0, |_| a);
                f_floor = f_floor.max(sign * (c * v - r.count));
            }
        }
    }
    if f_floor.is_finite() {
        let mut row = vec![0.0; n + 1];
        row[fv] = 1.0;
        lp.add_row(row, Sense::Ge, f_floor);
    }
    for a in 1..n {
        let mut row = vec![0.0; n + 1];
        row[a] = 1.0;
        row[a - 1] = -1.0;
        lp.add_row(row, Sense::Ge, ip.eps);
    }
    let sol = lp_solve(&lp)?;
    let free: Vec<f64> = sol.x[..n].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let f = match block {
        Block::X => ip.objective(&free, fixed),
        Block::Y => ip.objective(fixed, &free),
    };
    Ok((free, f))
}

/// One trust-region LP on the linearisation of every volume around `(x, y)`.
fn joint_step(ip: &InnerProblem, x: &[f64], y: &[f64], radius: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = ip.n();
    let nv = 2 * n + 1;
    let fv = 2 * n;
    let mut obj = vec![0.0; nv];
    obj[fv] = 1.0;
    let mut lower = Vec::with_capacity(nv);
    let mut upper = Vec::with_capacity(nv);
    for &v in x.iter().chain(y) {
        lower.push((v - radius).max(0.0));
        upper.push((v + radius).min(1.0));
    }
    lower.push(f64::NEG_INFINITY);
    upper.push(f64::INFINITY);
    let mut lp = LpProblem::new(obj, lower, upper);
    for r in &ip.rows {
        let (x0, y0) = (r.x.eval(x), r.y.eval(y));
        let sign = if r.over { -1.0 } else { 1.0 };
        // X·Y ≈ X0·Y0 + Y0·(X − X0) + X0·(Y − Y0)
        let mut row = vec![0.0; nv];
        let mut rhs = sign * r.count + sign * x0 * y0;
        if let Some(k) = r.x.var {
            let (a, b) = r.x.affine();
            row[k] += sign * y0 * b;
            rhs -= sign * y0 * a;
        } else {
            rhs -= sign * y0;
        }
        if let Some(k) = r.y.var {
            let (a, b) = r.y.affine();
            row[n + k] += sign * x0 * b;
            rhs -= sign * x0 * a;
        } else {
            rhs -= sign * x0;
        }
        row[fv] = -1.0;
        lp.add_row(row, Sense::Le, rhs);
    }
    for base in [0, n] {
        for a in 1..n {
            let mut row = vec![0.0; nv];
            row[base + a] = 1.0;
            row[base + a - 1] = -1.0;
            lp.add_row(row, Sense::Ge, ip.eps);
        }
    }
    let sol = lp_solve(&lp).ok()?;
    let clamp = |v: &f64| v.clamp(0.0, 1.0);
    Some((sol.x[..n].iter().map(clamp).collect(), sol.x[n..2 * n].iter().map(clamp).collect()))
}
