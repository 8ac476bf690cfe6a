//! Construction, evaluation and certification of low-discrepancy point sets.
//!
//! The crate is organised around a [`PointSet`] and a handful of engines:
//!
//! * [`discrepancy`]: exact L∞ star, extreme, periodic and 4-corner
//!   discrepancies with auditable witness boxes, plus naive oracles.
//! * [`shifts`]: admissible up/right/down/left moves, boundary lifts and a
//!   canonicalisation sweep that never increases the star discrepancy.
//! * [`model`]: a solver-neutral MINLP representation, builders for the
//!   classical, assignment, lattice, extreme, periodic and 4-corner
//!   formulations, LP-format I/O and a solution verifier.
//! * [`search`]: a dense bounded simplex, exhaustive small-n optimisation over
//!   permutations, lattice parameter search and a shift-descent heuristic.
//! * [`raster`]: local-discrepancy heatmaps in PGM and CSV.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod discrepancy;
pub mod error;
pub mod model;
pub mod pointset;
pub mod raster;
pub mod search;
pub mod shifts;
pub mod tables;

pub use discrepancy::{BoxKind, DiscrepancyReport, Measure};
pub use error::{Error, Result};
pub use model::{Extras, Family, ModelIR, SolutionRecord};
pub use pointset::{Grid, PointSet};
pub use raster::Heatmap;
pub use tables::TableId;

