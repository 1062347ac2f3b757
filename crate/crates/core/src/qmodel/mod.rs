//! Finite-dimensional quantum models.

pub mod checks;
pub mod matrix;
pub mod sampling;
pub mod scenario;
pub mod state;

pub use checks::*;
pub use matrix::{CMatrix, C64};
pub use scenario::*;
pub use state::{Observable, QuantumState};
