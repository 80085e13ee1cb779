//! Exact forward-difference operator algebra over a real number field.
//!
//! The crate covers exponential polynomials on ℝ^d with exact coefficients,
//! the group ring of translation operators acting on them, invariant
//! subspace closures, closure decompositions of finitely generated
//! subgroups of ℝ^d, non-analytic constructions whose differences are
//! exponential polynomials, and a solver that recovers an exponential
//! polynomial from prescribed forward differences.

pub mod codec;
pub mod construct;
pub mod error;
pub mod exppoly;
pub mod groups;
pub mod linalg;
pub mod numeric;
pub mod opalg;
pub mod scalar;
pub mod solver;
pub mod subspace;
pub mod vector;

pub use error::{Error, Result};
