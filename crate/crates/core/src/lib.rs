//! Numerical probes for the rank of integral-operator kernels and the local
//! invertibility of the induced Fredholm equations of the first kind.
//!
//! The crate evaluates a closed registry of kernel families, extracts their
//! Taylor functions by series arithmetic, estimates kernel rank by seeded
//! Monte Carlo sampling, and runs quadrature-discretized inversion
//! experiments with Tikhonov/TSVD regularization.

pub mod domains;
pub mod error;
pub mod fredholm;
pub mod kernels;
pub mod rank;
pub mod series;

pub use error::{Error, Result};
