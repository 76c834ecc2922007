//! Variable-exponent function-space machinery in one spatial dimension:
//! Nakano (variable-exponent Lebesgue) norms, variable-order fractional
//! Sobolev modulars, the fractional p(x,y)-Laplacian, a nonlocal Choquard
//! interaction energy, a mountain-pass solver for the associated
//! Euler-Lagrange equation, and experiments probing the compact/non-compact
//! embedding dichotomy for critically-touching growth exponents.
//!
//! Pairwise kernel sums are the computational core; they run data-parallel
//! on rayon when the `parallel` feature is enabled (the default), with a
//! sequential fallback selectable at runtime via [`grid::set_parallel`].
//! Parallel reductions are index-ordered, so both modes produce bit-identical
//! results.

pub mod choquard;
pub mod config;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod grid;
pub mod luxemburg;
pub mod nakano;
pub mod sobolev;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{set_parallel, Grid1D, GridFunction};
