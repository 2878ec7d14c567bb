//! End-to-end solver for experimental design under the p-norm-of-inverse-
//! eigenvalues objective: a projected-gradient convex relaxation, Caratheodory
//! sparsification of the fractional support, and randomized-exchange rounding
//! driven by a regret-minimization action matrix, together with the
//! brute-force and finite-difference oracles used to validate every piece.

pub mod error;
pub mod exchange;
pub mod objective;
pub mod oracle;
pub mod relax;
pub mod spectra;

pub use error::{Error, Result};
