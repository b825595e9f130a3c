//! Principal eigenpair of the Green operator by power iteration.

use serde::Serialize;
use thiserror::Error;

use crate::green::{GreenError, GreenSystem};
use crate::mesh::ScalarField;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error("power iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("Green operator annihilated the iterate")]
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenPair<T: Real> {
    /// Spectral radius estimate of the Green operator.
    pub r: T,
    /// `1 / r`.
    pub mu: T,
    /// Eigenfunction normalized to `max |phi| = 1`.
    #[serde(skip)]
    pub phi: ScalarField<T>,
    pub iterations: usize,
    /// `||G(phi) - r phi||_inf`.
    pub residual: T,
}

/// Power iteration on `G` from the constant start.
///
/// Stops once the change of the ratio `||G phi|| / ||phi||` and the
/// eigen-residual are both below `tol`.
pub fn principal_eigenpair<T: Real>(
    gs: &GreenSystem<T>,
    tol: T,
    max_iter: usize,
) -> Result<EigenPair<T>, SpectralError> {
    let n_int = gs.domain().n_interior();
    let mut phi = ScalarField::new(
        {
            let mut v = vec![T::one(); n_int];
            v.resize(gs.domain().n_nodes(), T::zero());
            v
        },
        n_int,
    );
    let mut r_prev = T::zero();
    let mut residual = T::infinity();
    for it in 1..=max_iter {
        let next = gs.green_apply(phi.interior())?;
        let r = next.sup_norm();
        if !(r > T::zero()) {
            return Err(SpectralError::Degenerate);
        }
        residual = next
            .values
            .iter()
            .zip(&phi.values)
            .fold(T::zero(), |m, (&g, &p)| m.max((g - r * p).abs()));
        let dr = (r - r_prev).abs();
        phi = ScalarField::new(next.values.iter().map(|&v| v / r).collect(), n_int);
        if dr < tol && residual < tol {
            return Ok(EigenPair {
                r,
                mu: T::one() / r,
                phi,
                iterations: it,
                residual,
            });
        }
        r_prev = r;
    }
    Err(SpectralError::NotConverged {
        iterations: max_iter,
        residual: residual.as_f64(),
    })
}
