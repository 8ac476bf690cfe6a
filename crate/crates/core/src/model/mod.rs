//! Solver-neutral representation of the discrepancy MINLPs.
//!
//! A [`ModelIR`] minimizes a single variable `f` subject to linear and
//! bilinear constraints. Builders in [`builders`] produce the classical,
//! assignment, lattice, extreme, periodic and 4-corner formulations;
//! [`lp_format`] reads and writes LP files and [`solution`] checks and
//! decodes externally computed assignments.
//!
//! Variable names follow a fixed convention so that solutions can be
//! matched by name: `x_i`, `y_i`, `z_i`, `y_i_j`, `a_i_j`, `a_i_j_k`, `w_i_j`,
//! `k_i`, `h_i`, `r`, `r1`, `r2` and `f`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::search::lp::Sense;

pub mod builders;
pub mod lp_format;
pub mod solution;

pub use builders::{
    build_assignment_2d, build_assignment_3d, build_classical_2d, build_corner4_model, build_extreme_model,
    build_lattice_model, build_periodic_model, Extras, DEFAULT_EPS,
};
pub use lp_format::{parse_lp, serialize_lp};
pub use solution::{check_solution, extract_pointset, CheckReport, Extracted, SolutionRecord, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Classical,
    Assign2d,
    Assign3d,
    Lattice,
    Lattice2,
    Extreme,
    Periodic,
    Corner4,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Classical,
        Family::Assign2d,
        Family::Assign3d,
        Family::Lattice,
        Family::Lattice2,
        Family::Extreme,
        Family::Periodic,
        Family::Corner4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Classical => "classical",
            Family::Assign2d => "assign2d",
            Family::Assign3d => "assign3d",
            Family::Lattice => "lattice",
            Family::Lattice2 => "lattice2",
            Family::Extreme => "extreme",
            Family::Periodic => "periodic",
            Family::Corner4 => "corner4",
        }
    }

    /// Whether points are encoded as `(x_{2i-1}, x_{2i})` pairs.
    pub fn is_classical(self) -> bool {
        matches!(self, Family::Classical | Family::Lattice | Family::Lattice2)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<&str> = Family::ALL.iter().map(|f| f.as_str()).collect();
                Error::invalid(format!("unknown model family '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn fixed(&self) -> Option<f64> {
        (self.lower == self.upper).then_some(self.lower)
    }
}

/// `Σ c·v + Σ c·u·v  (sense)  rhs`, with variables given by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub linear: Vec<(f64, usize)>,
    pub products: Vec<(f64, usize, usize)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn is_bilinear(&self) -> bool {
        !self.products.is_empty()
    }

    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.linear.iter().map(|&(c, v)| c * values[v]).sum::<f64>()
            + self.products.iter().map(|&(c, u, v)| c * values[u] * values[v]).sum::<f64>()
    }

    /// Amount by which `values` violate the constraint, zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.lhs(values);
        let r = match self.sense {
            Sense::Le => lhs - self.rhs,
            Sense::Ge => self.rhs - lhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        };
        r.max(0.0)
    }

    /// Name with trailing index tokens removed, e.g. `closed` for `closed_3_1`.
    pub fn family(&self) -> &str {
        family_of(&self.name)
    }
}

pub(crate) fn family_of(name: &str) -> &str {
    let mut end = name.len();
    for (i, tok) in name.rsplit('_').enumerate() {
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) || i + 1 == name.split('_').count() {
            break;
        }
        end -= tok.len() + 1;
    }
    &name[..end]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelIR {
    pub family: Option<Family>,
    pub n: usize,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: usize,
}

/// Counts by constraint family and variable kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub variables: usize,
    pub continuous: usize,
    pub binary: usize,
    pub fixed: usize,
    pub constraints: usize,
    pub bilinear: usize,
    pub families: BTreeMap<String, usize>,
}

impl ModelIR {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_name(&self) -> &str {
        &self.variables[self.objective].name
    }

    pub fn linear_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| !c.is_bilinear())
    }

    pub fn bilinear_constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| c.is_bilinear())
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn family_count(&self, family: &str) -> usize {
        self.constraints.iter().filter(|c| c.family() == family).count()
    }

    pub fn census(&self) -> Census {
        let mut families = BTreeMap::new();
        for c in &self.constraints {
            *families.entry(c.family().to_string()).or_insert(0) += 1;
        }
        Census {
            variables: self.variables.len(),
            continuous: self.variables.iter().filter(|v| v.kind == VarKind::Continuous).count(),
            binary: self.variables.iter().filter(|v| v.kind == VarKind::Binary).count(),
            fixed: self.variables.iter().filter(|v| v.fixed().is_some()).count(),
            constraints: self.constraints.len(),
            bilinear: self.bilinear_constraints().count(),
            families,
        }
    }

    /// Checks references, bounds and name uniqueness.
    pub fn validate(&self) -> Result<()> {
        let nv = self.variables.len();
        if self.objective >= nv {
            return Err(Error::Serialization("objective variable is not declared".into()));
        }
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Serialization(format!("duplicate variable name `{}`", v.name)));
            }
            if !valid_name(&v.name) {
                return Err(Error::Serialization(format!("invalid variable name `{}`", v.name)));
            }
            if !(v.lower <= v.upper) {
                return Err(Error::Serialization(format!(
                    "variable `{}` has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        let mut seen = HashSet::new();
        for c in &self.constraints {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Serialization(format!("duplicate constraint name `{}`", c.name)));
            }
            if !valid_name(&c.name) {
                return Err(Error::Serialization(format!("invalid constraint name `{}`", c.name)));
            }
            let refs = c.linear.iter().map(|t| t.1).chain(c.products.iter().flat_map(|t| [t.1, t.2]));
            if let Some(bad) = refs.into_iter().find(|&v| v >= nv) {
                return Err(Error::Serialization(format!(
                    "constraint `{}` references undeclared variable #{bad}",
                    c.name
                )));
            }
        }
        Ok(())
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A known constant or a variable index.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Atom {
    C(f64),
    V(usize),
}

/// Affine-plus-bilinear expression used while building constraints.
#[derive(Debug, Clone, Default)]
pub(crate) struct Expr {
    constant: f64,
    linear: BTreeMap<usize, f64>,
    products: BTreeMap<(usize, usize), f64>,
}

impl Expr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn term(mut self, c: f64, a: Atom) -> Self {
        match a {
            Atom::C(v) => self.constant += c * v,
            Atom::V(i) => *self.linear.entry(i).or_insert(0.0) += c,
        }
        self
    }

    pub fn terms(self, c: f64, atoms: impl IntoIterator<Item = Atom>) -> Self {
        atoms.into_iter().fold(self, |e, a| e.term(c, a))
    }

    pub fn product(mut self, c: f64, a: Atom, b: Atom) -> Self {
        match (a, b) {
            (Atom::C(u), Atom::C(v)) => self.constant += c * u * v,
            (Atom::C(u), v @ Atom::V(_)) | (v @ Atom::V(_), Atom::C(u)) => self = self.term(c * u, v),
            (Atom::V(i), Atom::V(j)) => *self.products.entry((i, j)).or_insert(0.0) += c,
        }
        self
    }

    /// Adds `c · (a0 + Σ a) · (b0 + Σ b)` for affine factors given as
    /// `(constant, [(coef, atom)])`.
    pub fn affine_product(mut self, c: f64, a: (f64, &[(f64, Atom)]), b: (f64, &[(f64, Atom)])) -> Self {
        self.constant += c * a.0 * b.0;
        for &(ca, ta) in a.1 {
            self = self.term(c * ca * b.0, ta);
        }
        for &(cb, tb) in b.1 {
            self = self.term(c * cb * a.0, tb);
        }
        for &(ca, ta) in a.1 {
            for &(cb, tb) in b.1 {
                self = self.product(c * ca * cb, ta, tb);
            }
        }
        self
    }
}

/// Incremental model construction.
pub(crate) struct Builder {
    ir: ModelIR,
}

impl Builder {
    pub fn new(family: Family, n: usize) -> Self {
        let mut b = Builder {
            ir: ModelIR { family: Some(family), n, variables: Vec::new(), constraints: Vec::new(), objective: 0 },
        };
        b.ir.objective = b.var("f", VarKind::Continuous, 0.0, f64::INFINITY);
        b
    }

    pub fn var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> usize {
        self.ir.variables.push(Variable { name: name.into(), kind, lower, upper });
        self.ir.variables.len() - 1
    }

    pub fn f(&self) -> Atom {
        Atom::V(self.ir.objective)
    }

    pub fn add(&mut self, name: impl Into<String>, e: Expr, sense: Sense, rhs: f64) {
        let keep = |c: &f64| *c != 0.0;
        self.ir.constraints.push(Constraint {
            name: name.into(),
            linear: e.linear.into_iter().filter(|(_, c)| keep(c)).map(|(v, c)| (c, v)).collect(),
            products: e.products.into_iter().filter(|(_, c)| keep(c)).map(|((u, v), c)| (c, u, v)).collect(),
            sense,
            rhs: rhs - e.constant,
        });
    }

    pub fn finish(self) -> ModelIR {
        debug_assert!(self.ir.validate().is_ok());
        self.ir
    }
}
