//! Relativistic-independence bounds on Bell correlators.
//!
//! Pearson-level CHSH analysis, the `r'` feasibility test, quantum and
//! local-hidden-variable models, tripartite and n-party bounds, and a
//! numerical optimizer for tracing bound curves.

// Index loops mirror the matrix formulas; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlators;
pub mod error;
pub mod lhv;
pub mod linalg;
pub mod multiparty;
pub mod optimizer;
pub mod qmodel;
pub mod ri;

pub use error::{Error, Result};
