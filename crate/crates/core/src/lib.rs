//! Numerical engines for the compact support property of measure-valued
//! diffusions with branching mechanism `beta*z - alpha*z^p`.
//!
//! Three engines answer the same question from different directions:
//!
//! * [`branching`] simulates the particle approximation and its
//!   Galton-Watson skeleton,
//! * [`pde`] computes the maximal solution of the semilinear equation with
//!   zero initial data,
//! * [`csp`] classifies scenarios from the known sufficient conditions.
//!
//! [`generator`] holds the underlying diffusion and its explosion test.

pub mod branching;
pub mod csp;
pub mod error;
pub mod expr;
pub mod generator;
pub mod grid;
pub mod par;
pub mod pde;
pub mod rng;
pub mod stats;
pub mod tridiag;

pub use error::{Error, Result};
pub use expr::{Expr, Var};
