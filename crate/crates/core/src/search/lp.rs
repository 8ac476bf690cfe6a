//! Dense bounded-variable primal simplex.
//!
//! The solver keeps a condensed tableau with one column per nonbasic
//! variable, so the work per pivot is `rows × structural variables`. That is
//! the right shape for the inner problems of the exact search: a handful of
//! coordinates and a few hundred box constraints.
//!
//! Every row `a·x (≤|=|≥) b` gets a slack `s = b − a·x` with bounds `[0, ∞)`,
//! `[0, 0]` or `(−∞, 0]`. Phase 1 minimises the total bound violation of the
//! basic variables (composite simplex); phase 2 minimises the objective.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots so that cycling cannot occur.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 5e-10;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize c·x` subject to dense rows and variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpProblem {
    /// A problem over `n` variables with the given bounds and no rows.
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        LpProblem { objective, rows: Vec::new(), lower, upper }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefs: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { coefs, sense, rhs });
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("bound vectors do not match the objective".into()));
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable {j} has bounds [{l}, {u}]")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coefs.len() != n {
                return Err(LpError::Malformed(format!("row {i} has {} coefficients", row.coefs.len())));
            }
            if !row.rhs.is_finite() || row.coefs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::Malformed(format!("row {i} is not finite")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("objective is not finite".into()));
        }
        Ok(())
    }
}

struct Tableau {
    m: usize,
    n: usize,
    /// `t[i * n + j]`: rate of basic `i` per unit of nonbasic column `j`.
    t: Vec<f64>,
    /// Basic values are `d + t · x_N`.
    d: Vec<f64>,
    /// Reduced costs of the nonbasic columns for the current objective.
    cost: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
}

impl Tableau {
    fn new(p: &LpProblem) -> Self {
        let n = p.num_vars();
        let m = p.rows.len();
        let mut t = vec![0.0; m * n];
        for (i, row) in p.rows.iter().enumerate() {
            for (j, &a) in row.coefs.iter().enumerate() {
                t[i * n + j] = -a;
            }
        }
        let mut lower = p.lower.clone();
        let mut upper = p.upper.clone();
        for row in &p.rows {
            let (l, u) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut value = vec![0.0; n + m];
        for j in 0..n {
            value[j] = if lower[j].is_finite() {
                lower[j]
            } else if upper[j].is_finite() {
                upper[j]
            } else {
                0.0
            };
        }
        let mut tab = Tableau {
            m,
            n,
            t,
            d: p.rows.iter().map(|r| r.rhs).collect(),
            cost: p.objective.clone(),
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            lower,
            upper,
            value,
        };
        tab.refresh_basics();
        tab
    }

    fn refresh_basics(&mut self) {
        for i in 0..self.m {
            let row = &self.t[i * self.n..(i + 1) * self.n];
            let v = self.d[i]
                + row.iter().zip(&self.nonbasic).map(|(a, &k)| a * self.value[k]).sum::<f64>();
            self.value[self.basic[i]] = v;
        }
    }

    fn infeasibility(&self, i: usize) -> f64 {
        let k = self.basic[i];
        if self.value[k] < self.lower[k] - FEAS_TOL {
            -1.0
        } else if self.value[k] > self.upper[k] + FEAS_TOL {
            1.0
        } else {
            0.0
        }
    }

    /// Gradient of the total bound violation with respect to each nonbasic.
    fn phase1_costs(&self) -> Option<Vec<f64>> {
        let mut w = vec![0.0; self.n];
        let mut any = false;
        for i in 0..self.m {
            let s = self.infeasibility(i);
            if s != 0.0 {
                any = true;
                for (wj, a) in w.iter_mut().zip(&self.t[i * self.n..(i + 1) * self.n]) {
                    *wj += s * a;
                }
            }
        }
        any.then_some(w)
    }

    /// Entering column and direction (+1 increase, −1 decrease).
    fn price(&self, costs: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            let k = self.nonbasic[j];
            let c = costs[j];
            let dir = if c < -COST_TOL && self.value[k] < self.upper[k] {
                1.0
            } else if c > COST_TOL && self.value[k] > self.lower[k] {
                -1.0
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bj, _, bc)) => {
                    if bland {
                        k < self.nonbasic[bj]
                    } else {
                        c.abs() > bc
                    }
                }
            };
            if better {
                best = Some((j, dir, c.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Step at which basic row `i` blocks, with its bounds widened by `relax`.
    /// Rows that are below (above) their bound in phase 1 block only when
    /// they reach it from the infeasible side.
    fn row_limit(&self, i: usize, alpha: f64, phase1: bool, relax: f64) -> Option<f64> {
        let k = self.basic[i];
        let v = self.value[k];
        let (lo, hi) = (self.lower[k], self.upper[k]);
        if phase1 && v < lo - FEAS_TOL {
            return (alpha > 0.0).then(|| (lo - v) / alpha);
        }
        if phase1 && v > hi + FEAS_TOL {
            return (alpha < 0.0).then(|| (v - hi) / -alpha);
        }
        if alpha < 0.0 {
            lo.is_finite().then(|| ((v - lo + relax) / -alpha).max(0.0))
        } else {
            hi.is_finite().then(|| ((hi - v + relax) / alpha).max(0.0))
        }
    }

    /// Step length and the blocking row (`None` for a bound flip).
    ///
    /// Two-pass ratio test: the first pass finds the longest step that keeps
    /// every basic within `HARRIS_TOL` of its bounds, the second takes the
    /// largest pivot among rows blocking within that step.
    fn ratio(&self, q: usize, dir: f64, phase1: bool, bland: bool) -> (f64, Option<usize>) {
        let entering = self.nonbasic[q];
        let range = self.upper[entering] - self.lower[entering];
        let alphas: Vec<(usize, f64)> = (0..self.m)
            .map(|i| (i, self.t[i * self.n + q] * dir))
            .filter(|&(_, a)| a.abs() > PIVOT_TOL)
            .collect();
        let relaxed = alphas
            .iter()
            .filter_map(|&(i, a)| self.row_limit(i, a, phase1, HARRIS_TOL))
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64, f64)> = None;
        for &(i, alpha) in &alphas {
            let Some(limit) = self.row_limit(i, alpha, phase1, 0.0) else {
                continue;
            };
            if limit > relaxed {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bl, _)) if bland => {
                    limit < bl - 1e-12 || (limit <= bl + 1e-12 && self.basic[i] < self.basic[bi])
                }
                Some((_, _, ba)) => alpha.abs() > ba,
            };
            if better {
                best = Some((i, limit, alpha.abs()));
            }
        }
        match best {
            // prefer a bound flip over a pivot that blocks no earlier
            Some((_, limit, _)) if range <= limit => (range, None),
            Some((i, limit, _)) => (limit, Some(i)),
            None => (range, None),
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let p = self.t[r * n + q];
        let inv = 1.0 / p;
        for j in 0..n {
            if j != q {
                self.t[r * n + j] *= -inv;
            }
        }
        self.t[r * n + q] = inv;
        self.d[r] *= -inv;
        let (pivot_row, rest) = {
            let row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
            (row, self.d[r])
        };
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let a = self.t[i * n + q];
            if a == 0.0 {
                continue;
            }
            for j in 0..n {
                if j != q {
                    self.t[i * n + j] += a * pivot_row[j];
                }
            }
            self.t[i * n + q] = a * inv;
            self.d[i] += a * rest;
        }
        let c = self.cost[q];
        if c != 0.0 {
            for j in 0..n {
                if j != q {
                    self.cost[j] += c * pivot_row[j];
                }
            }
            self.cost[q] = c * inv;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[q]);
    }

    /// Runs one phase; phase 1 ends as soon as all basics are within bounds.
    fn run(&mut self, phase1: bool, iterations: &mut usize, limit: usize) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        loop {
            if *iterations >= limit {
                return Err(LpError::IterationLimit(limit));
            }
            let costs = if phase1 {
                match self.phase1_costs() {
                    Some(w) => w,
                    None => return Ok(()),
                }
            } else {
                self.cost.clone()
            };
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((q, dir)) = self.price(&costs, bland) else {
                return if phase1 { Err(LpError::Infeasible) } else { Ok(()) };
            };
            let (step, row) = self.ratio(q, dir, phase1, bland);
            if step == f64::INFINITY {
                return Err(if phase1 { LpError::Infeasible } else { LpError::Unbounded });
            }
            *iterations += 1;
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            let entering = self.nonbasic[q];
            self.value[entering] += dir * step;
            match row {
                None => {
                    // bound flip: snap to the bound reached
                    self.value[entering] =
                        if dir > 0.0 { self.upper[entering] } else { self.lower[entering] };
                }
                Some(r) => {
                    let leaving = self.basic[r];
                    let alpha = self.t[r * self.n + q] * dir;
                    let v = self.value[leaving] + alpha * step;
                    let (lo, hi) = (self.lower[leaving], self.upper[leaving]);
                    let target = if phase1 && self.value[leaving] < lo - FEAS_TOL {
                        lo
                    } else if phase1 && self.value[leaving] > hi + FEAS_TOL {
                        hi
                    } else if alpha < 0.0 {
                        lo
                    } else {
                        hi
                    };
                    debug_assert!((v - target).abs() < 1e-6 * (1.0 + target.abs()));
                    self.pivot(r, q);
                    self.value[leaving] = target;
                }
            }
            self.refresh_basics();
        }
    }
}

/// Solves the LP, returning an optimal vertex.
pub fn lp_solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    let mut tab = Tableau::new(p);
    let limit = 100 * (tab.m + tab.n) + 1000;
    let mut iterations = 0;
    // roundoff can push a basic out of bounds during phase 2; restore
    // feasibility and reoptimize when that happens
    for _ in 0..3 {
        tab.run(true, &mut iterations, limit)?;
        tab.run(false, &mut iterations, limit)?;
        if (0..tab.m).all(|i| tab.infeasibility(i) == 0.0) {
            break;
        }
    }
    let x: Vec<f64> = tab.value[..p.num_vars()].to_vec();
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective, iterations })
}
