//! Discretized divergence-form elliptic operators, Green-operator constants,
//! hypothesis certification and fixed-point search for elliptic systems with
//! functional boundary conditions.

// NaN-rejecting comparisons are written as `!(a < b)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod expr;
pub mod green;
pub mod mesh;
pub mod operator;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod spectral;

pub use scalar::Real;

/// Double-precision discretized domain.
pub type Domain = mesh::DiscreteDomain<f64>;
/// Double-precision node field.
pub type Field = mesh::ScalarField<f64>;
