//! Numerical toolkit for the generalized Radon transform `R_q`, the kernel
//! transform `R^h_q` and the profit operator `Pi_q` on the positive orthant.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over paired arrays read closer to the formulas.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod cost_model;
pub mod diagnostics;
pub mod error;
pub mod inversion;
pub mod mellin_engine;
pub mod selftest;
pub mod transforms;

pub use cost_model::{CostExpr, Node};
pub use error::{Error, Result};
