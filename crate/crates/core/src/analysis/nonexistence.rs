use serde::Serialize;

use super::bounds::{compute_tau, compute_xi, nonneg_certificate, RatioBound, NONNEG_TOL};
use super::constants::EquationConstants;
use super::existence::{weighted, Inequality};
use super::search::{Geometry, SearchOptions};
use super::{AnalysisError, Radii};
use crate::scalar::Real;
use crate::solver::SystemSpec;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NonexistenceEquation {
    /// One-based.
    pub k: usize,
    pub lambda: f64,
    pub eta: f64,
    pub tau: RatioBound,
    pub xi: RatioBound,
    pub f_lower: f64,
    /// `lambda_k tau_k ||G_k(1)|| + eta_k xi_k ||gamma_k||`.
    pub lhs: f64,
    pub g1_sup: f64,
    pub gamma_sup: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NonexistenceReport {
    pub equations: Vec<NonexistenceEquation>,
    pub rho: Vec<f64>,
    pub inequalities: Vec<Inequality>,
    pub verdict: bool,
    pub conclusion: String,
    pub notes: Vec<String>,
}

impl NonexistenceReport {
    pub fn inequality(&self, name: &str) -> Option<&Inequality> {
        self.inequalities.iter().find(|i| i.name == name)
    }
}

/// Parameter-independent part of the non-existence check.
pub struct NonexistencePrep {
    pub radii: Radii,
    pub tau: Vec<RatioBound>,
    pub xi: Vec<RatioBound>,
    pub f_lower: Vec<f64>,
    pub constants: Vec<EquationConstants>,
}

impl NonexistencePrep {
    pub fn new<T: Real>(spec: &SystemSpec<T>, radii: &Radii, constants: &[EquationConstants], search: &SearchOptions) -> Result<Self, AnalysisError> {
        let m = spec.m();
        radii.validate(m)?;
        if constants.len() != m {
            return Err(AnalysisError::Radii(format!("{} constant sets for {m} equations", constants.len())));
        }
        let geom = Geometry::of(&spec.dom);
        let mut tau = Vec::new();
        let mut xi = Vec::new();
        let mut f_lower = Vec::new();
        for (k, e) in spec.equations.iter().enumerate() {
            tau.push(compute_tau(&e.f, k, &radii.rho, &geom, search)?);
            xi.push(compute_xi(&e.h, &radii.rho, &spec.dom, &geom)?);
            f_lower.push(nonneg_certificate(&e.f, &radii.rho, &geom).lower);
        }
        Ok(NonexistencePrep {
            radii: radii.clone(),
            tau,
            xi,
            f_lower,
            constants: constants.to_vec(),
        })
    }

    pub fn evaluate(&self, lambda: &[f64], eta: &[f64]) -> NonexistenceReport {
        let m = self.tau.len();
        let mut ineq = Vec::new();
        let mut equations = Vec::new();
        let mut notes = Vec::new();
        for k in 0..m {
            let k1 = k + 1;
            let c = &self.constants[k];
            let (tau, xi) = (self.tau[k].certified, self.xi[k].certified);
            for (what, r) in [("tau", &self.tau[k]), ("xi", &self.xi[k])] {
                if let Some(n) = &r.note {
                    notes.push(format!("{what}_{k1}: {n}"));
                }
            }
            ineq.push(Inequality::new(format!("a.k{k1}"), -NONNEG_TOL, self.f_lower[k], false));
            ineq.push(Inequality::new(format!("tau.k{k1}"), tau, f64::INFINITY, true));
            ineq.push(Inequality::new(format!("xi.k{k1}"), xi, f64::INFINITY, true));
            let lhs = weighted(lambda[k] * c.g1_sup, tau, eta[k] * c.gamma_sup, xi);
            ineq.push(Inequality::new(format!("c.k{k1}"), lhs, 1.0, true));
            equations.push(NonexistenceEquation {
                k: k1,
                lambda: lambda[k],
                eta: eta[k],
                tau: self.tau[k].clone(),
                xi: self.xi[k].clone(),
                f_lower: self.f_lower[k],
                lhs,
                g1_sup: c.g1_sup,
                gamma_sup: c.gamma_sup,
            });
        }
        let verdict = ineq.iter().all(|i| i.pass);
        let conclusion = if verdict {
            "the only solution in the cone is zero".to_string()
        } else {
            let failed: Vec<&str> = ineq.iter().filter(|i| !i.pass).map(|i| i.name.as_str()).collect();
            format!("hypotheses not verified: {}", failed.join(", "))
        };
        NonexistenceReport {
            equations,
            rho: self.radii.rho.clone(),
            inequalities: ineq,
            verdict,
            conclusion,
            notes,
        }
    }
}

/// Checks the hypotheses of the non-existence test at the parameters of `spec`.
pub fn check_nonexistence<T: Real>(spec: &SystemSpec<T>, radii: &Radii, constants: &[EquationConstants], search: &SearchOptions) -> Result<NonexistenceReport, AnalysisError> {
    Ok(NonexistencePrep::new(spec, radii, constants, search)?.evaluate(&spec.lambdas(), &spec.etas()))
}
