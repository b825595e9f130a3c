use serde::Serialize;

use super::search::SearchOptions;
use super::AnalysisError;
use crate::green::{green_constants, ConstantOptions};
use crate::scalar::Real;
use crate::solver::System;
use crate::spectral::principal_eigenpair;

/// Operator constants of one equation.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EquationConstants {
    /// `||G_k(1)||_inf`.
    pub g1_sup: f64,
    /// `G_{k,l}`, one per axis.
    pub deriv: Vec<f64>,
    pub gamma_sup: f64,
    pub gamma_grad_sup: Vec<f64>,
    /// Principal eigenvalue of `L_k`.
    pub mu: f64,
    /// Spectral radius of `G_k`.
    pub r: f64,
    pub sources: usize,
    pub exhaustive: bool,
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub green: ConstantOptions,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
    pub search: SearchOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            green: ConstantOptions::default(),
            eigen_tol: 1e-8,
            eigen_max_iter: 10_000,
            search: SearchOptions::default(),
        }
    }
}

/// Constants for every equation; factorizations shared between equations
/// reuse the Green sweep and the eigenpair.
pub fn compute_constants<T: Real>(sys: &System<T>, opts: &AnalysisOptions) -> Result<Vec<EquationConstants>, AnalysisError> {
    let dom = sys.dom();
    let n = dom.dim();
    let mut out: Vec<EquationConstants> = Vec::with_capacity(sys.m());
    for k in 0..sys.m() {
        let owner = sys.green_owner(k);
        if owner < k {
            let gamma = sys.gamma(k);
            let grad = dom.gradient(gamma);
            let mut c = out[owner].clone();
            c.gamma_sup = gamma.sup_norm().as_f64();
            c.gamma_grad_sup = (0..n).map(|l| grad.component_sup(l).as_f64()).collect();
            out.push(c);
            continue;
        }
        let gs = sys.green(k);
        let gc = green_constants(gs, sys.zeta(k), opts.green)?;
        let ep = principal_eigenpair(gs, T::lit(opts.eigen_tol), opts.eigen_max_iter)?;
        out.push(EquationConstants {
            g1_sup: gc.sup_norm_g1.as_f64(),
            deriv: gc.deriv_constants.iter().map(|v| v.as_f64()).collect(),
            gamma_sup: gc.gamma_sup.as_f64(),
            gamma_grad_sup: gc.gamma_grad_sup.iter().map(|v| v.as_f64()).collect(),
            mu: ep.mu.as_f64(),
            r: ep.r.as_f64(),
            sources: gc.sources,
            exhaustive: gc.exhaustive,
        });
    }
    Ok(out)
}
