//! The fixed-point map `A = T + Gamma` and damped Picard iteration.

mod picard;
mod system;

pub use picard::{
    apply_a, c1_norm, fixed_point_iterate, initial_fields, residual, sup_norm, BoundCheck, Classification, FixedPointResult, Residual, SolveOptions, Start,
};
pub use system::{Equation, SolverError, System, SystemSpec};
