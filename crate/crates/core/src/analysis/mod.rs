//! Constants and hypothesis checks for the existence and non-existence tests.

mod bounds;
mod constants;
mod existence;
mod nonexistence;
mod scan;
mod search;

use serde::Serialize;
use thiserror::Error;

pub use bounds::{
    check_lower_bound, compute_hk, compute_mk, compute_tau, compute_xi, find_rho0, functional_extrema, growth_tol, nonneg_certificate, BoundMode,
    FunctionalBound, LowerBoundCheck, MaxBound, RatioBound, MAX_BOXES, NONNEG_TOL, ZERO_TOL,
};
pub use constants::{compute_constants, AnalysisOptions, EquationConstants};
pub use existence::{check_existence, ExistencePrep, ExistenceReport, Inequality};
pub use nonexistence::{check_nonexistence, NonexistencePrep, NonexistenceReport};
pub use scan::{scan_region, Range, ScanGrid, ScanRow};
pub use search::{certify_lower, expr_max, maximize, minimize, Extremum, Geometry, LowerCert, Objective, Region, SearchOptions};

use crate::expr::{EvalError, FunctionalError};
use crate::green::GreenError;
use crate::solver::SolverError;
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("not admissible: {0}")]
    NotAdmissible(EvalError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid radii: {0}")]
    Radii(String),
}

/// `rho_k` bound the cone; `rho0`, `delta`, `k0` enter the lower-growth
/// hypothesis. `k0` is zero-based.
#[derive(Clone, Debug, Serialize, PartialEq, Default)]
pub struct Radii {
    pub rho: Vec<f64>,
    pub rho0: Option<f64>,
    pub delta: Option<f64>,
    pub k0: Option<usize>,
}

impl Radii {
    pub fn new(rho: Vec<f64>) -> Self {
        Radii { rho, ..Default::default() }
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, m: usize) -> Result<(), AnalysisError> {
        if self.rho.len() != m {
            return Err(AnalysisError::Radii(format!("{} radii for {m} equations", self.rho.len())));
        }
        if let Some(r) = self.rho.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(AnalysisError::Radii(format!("rho = {r} is not positive")));
        }
        if let Some(r0) = self.rho0 {
            if !(r0 > 0.0 && r0 < self.min_rho()) {
                return Err(AnalysisError::Radii(format!("rho0 = {r0} outside (0, {})", self.min_rho())));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(AnalysisError::Radii(format!("delta = {d} is not positive")));
            }
        }
        if let Some(k) = self.k0 {
            if k >= m {
                return Err(AnalysisError::Radii(format!("k0 = {} outside 1..{m}", k + 1)));
            }
        }
        Ok(())
    }
}
