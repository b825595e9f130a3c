use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;

use super::bounds::{check_lower_bound, compute_hk, compute_mk, find_rho0, nonneg_certificate, BoundMode, FunctionalBound, LowerBoundCheck, MaxBound, NONNEG_TOL};
use super::constants::EquationConstants;
use super::search::{Geometry, SearchOptions};
use super::{AnalysisError, Radii};
use crate::expr::Expr;
use crate::scalar::Real;
use crate::solver::SystemSpec;

/// `lhs <= rhs` (or `<` when strict), with `margin = rhs - lhs`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub pass: bool,
    pub margin: f64,
}

impl Inequality {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, strict: bool) -> Self {
        let pass = if strict { lhs < rhs } else { lhs <= rhs };
        Inequality {
            name: name.into(),
            lhs,
            rhs,
            strict,
            pass,
            margin: rhs - lhs,
        }
    }

    /// Re-evaluates the comparison from the stored numbers.
    pub fn recheck(&self) -> bool {
        if self.strict {
            self.lhs < self.rhs
        } else {
            self.lhs <= self.rhs
        }
    }
}

/// `lambda * a + eta * b` with `0 * inf = 0`.
pub(crate) fn weighted(lambda: f64, a: f64, eta: f64, b: f64) -> f64 {
    let p = |c: f64, v: f64| if c == 0.0 { 0.0 } else { c * v };
    p(lambda, a) + p(eta, b)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EquationReport {
    /// One-based.
    pub k: usize,
    pub lambda: f64,
    pub eta: f64,
    pub m: MaxBound,
    pub h: FunctionalBound,
    /// Certified lower bound of `f_k` on the cone box.
    pub f_lower: f64,
    pub constants: EquationConstants,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExistenceReport {
    pub equations: Vec<EquationReport>,
    pub rho: Vec<f64>,
    /// One-based.
    pub k0: usize,
    pub mu_k0: f64,
    pub delta: f64,
    pub rho0: f64,
    pub lower_bound: LowerBoundCheck,
    pub inequalities: Vec<Inequality>,
    pub verdict: bool,
    pub conclusion: String,
    pub notes: Vec<String>,
}

impl ExistenceReport {
    pub fn inequality(&self, name: &str) -> Option<&Inequality> {
        self.inequalities.iter().find(|i| i.name == name)
    }
}

type GrowthKey = (usize, u64, u64);

/// Parameter-independent part of the existence check.
pub struct ExistencePrep {
    pub geom: Geometry,
    pub radii: Radii,
    pub f: Vec<Expr>,
    pub m: Vec<MaxBound>,
    pub h: Vec<FunctionalBound>,
    pub f_lower: Vec<f64>,
    pub constants: Vec<EquationConstants>,
    pub search: SearchOptions,
    growth: Mutex<HashMap<GrowthKey, (f64, LowerBoundCheck)>>,
}

impl ExistencePrep {
    pub fn new<T: Real>(spec: &SystemSpec<T>, radii: &Radii, constants: &[EquationConstants], search: &SearchOptions) -> Result<Self, AnalysisError> {
        let mm = spec.m();
        radii.validate(mm)?;
        if constants.len() != mm {
            return Err(AnalysisError::Radii(format!("{} constant sets for {mm} equations", constants.len())));
        }
        let geom = Geometry::of(&spec.dom);
        let mut m = Vec::new();
        let mut h = Vec::new();
        let mut f_lower = Vec::new();
        for e in &spec.equations {
            m.push(compute_mk(&e.f, &radii.rho, &geom, search)?);
            h.push(compute_hk(&e.h, &radii.rho, &spec.dom, &geom)?);
            f_lower.push(nonneg_certificate(&e.f, &radii.rho, &geom).lower);
        }
        Ok(ExistencePrep {
            geom,
            radii: radii.clone(),
            f: spec.equations.iter().map(|e| e.f.clone()).collect(),
            m,
            h,
            f_lower,
            constants: constants.to_vec(),
            search: *search,
            growth: Mutex::new(HashMap::new()),
        })
    }

    /// `(rho0, check)` of the lower-growth hypothesis for `k0`, `delta`.
    fn growth(&self, k0: usize, delta: f64) -> Result<(f64, LowerBoundCheck), AnalysisError> {
        let fixed = self.radii.rho0.unwrap_or(0.0);
        let key = (k0, delta.to_bits(), fixed.to_bits());
        if let Some(v) = self.growth.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let mm = self.f.len();
        let rho0 = match self.radii.rho0 {
            Some(r) => r,
            None => find_rho0(&self.f[k0], k0, delta, mm, self.radii.min_rho(), &self.geom),
        };
        let check = if rho0 > 0.0 {
            check_lower_bound(&self.f[k0], k0, delta, rho0, mm, &self.geom, &self.search)?
        } else {
            LowerBoundCheck {
                pass: false,
                lower: f64::NEG_INFINITY,
                sampled_min: f64::NEG_INFINITY,
                boxes: 0,
                tol: 0.0,
            }
        };
        self.growth.lock().unwrap().insert(key, (rho0, check.clone()));
        Ok((rho0, check))
    }

    /// Smallest `delta` with `delta * lambda >= mu`.
    fn tight_delta(mu: f64, lambda: f64) -> f64 {
        let mut d = mu / lambda;
        while d * lambda < mu {
            d = d.next_up();
        }
        d
    }

    /// `(k0, delta, rho0, check)`, honouring user choices and otherwise
    /// trying equations in order of increasing `mu_k / lambda_k`.
    fn choose(&self, lambda: &[f64], notes: &mut Vec<String>) -> Result<(usize, f64, f64, LowerBoundCheck), AnalysisError> {
        let mu = |k: usize| self.constants[k].mu;
        let delta_for = |k: usize| match self.radii.delta {
            Some(d) => d,
            None if lambda[k] > 0.0 => Self::tight_delta(mu(k), lambda[k]),
            None => mu(k),
        };
        if let Some(k0) = self.radii.k0 {
            let d = delta_for(k0);
            let (r0, c) = self.growth(k0, d)?;
            return Ok((k0, d, r0, c));
        }
        let mut cands: Vec<usize> = (0..lambda.len()).filter(|&k| lambda[k] > 0.0).collect();
        if cands.is_empty() {
            notes.push("every lambda_k is zero; no k0 can satisfy the eigenvalue condition".into());
            let d = delta_for(0);
            let (r0, c) = self.growth(0, d)?;
            return Ok((0, d, r0, c));
        }
        cands.sort_by(|&a, &b| (mu(a) / lambda[a]).total_cmp(&(mu(b) / lambda[b])));
        let mut first = None;
        for &k in &cands {
            let d = delta_for(k);
            let (r0, c) = self.growth(k, d)?;
            if c.pass && r0 > 0.0 {
                return Ok((k, d, r0, c));
            }
            first.get_or_insert((k, d, r0, c));
        }
        notes.push("no equation admits the lower-growth bound with a positive rho0".into());
        Ok(first.unwrap())
    }

    pub fn evaluate(&self, lambda: &[f64], eta: &[f64]) -> Result<ExistenceReport, AnalysisError> {
        let mm = self.f.len();
        let rho = &self.radii.rho;
        let mut notes = Vec::new();
        let mut ineq = Vec::new();
        for k in 0..mm {
            ineq.push(Inequality::new(format!("a1.k{}", k + 1), -NONNEG_TOL, self.f_lower[k], false));
        }
        for k in 0..mm {
            let lower = match self.h[k].mode {
                BoundMode::Monotone => self.h[k].lower,
                BoundMode::Heuristic => {
                    notes.push(format!("h_{} is not monotone on the cone; H_{} is a heuristic estimate", k + 1, k + 1));
                    f64::NEG_INFINITY
                }
            };
            ineq.push(Inequality::new(format!("a2.k{}", k + 1), -NONNEG_TOL, lower, false));
        }
        let (k0, delta, rho0, check) = self.choose(lambda, &mut notes)?;
        let b_rhs = if rho0 > 0.0 { check.lower.min(check.sampled_min) } else { f64::NEG_INFINITY };
        let b = Inequality::new("b", -check.tol, b_rhs, false);
        ineq.push(b);
        let mu_k0 = self.constants[k0].mu;
        let rhs_c1 = if lambda[k0] == 0.0 { 0.0 } else { delta * lambda[k0] };
        ineq.push(Inequality::new("c1", mu_k0, rhs_c1, false));
        for k in 0..mm {
            let c = &self.constants[k];
            let (mk, hk) = (self.m[k].value, self.h[k].value);
            ineq.push(Inequality::new(format!("c2.k{}", k + 1), weighted(lambda[k] * mk, c.g1_sup, eta[k] * hk, c.gamma_sup), rho[k], false));
            for l in 0..c.deriv.len() {
                ineq.push(Inequality::new(
                    format!("c3.k{}.l{}", k + 1, l + 1),
                    weighted(lambda[k] * mk, c.deriv[l], eta[k] * hk, c.gamma_grad_sup[l]),
                    rho[k],
                    false,
                ));
            }
        }
        let verdict = ineq.iter().all(|i| i.pass);
        let conclusion = if verdict {
            format!("a solution u in the cone exists with ||u||_C1 >= rho0 = {rho0:.6e} and ||u_k||_inf <= rho_k; it is nonzero")
        } else {
            let failed: Vec<&str> = ineq.iter().filter(|i| !i.pass).map(|i| i.name.as_str()).collect();
            format!("hypotheses not verified: {}", failed.join(", "))
        };
        let equations = (0..mm)
            .map(|k| EquationReport {
                k: k + 1,
                lambda: lambda[k],
                eta: eta[k],
                m: self.m[k].clone(),
                h: self.h[k].clone(),
                f_lower: self.f_lower[k],
                constants: self.constants[k].clone(),
            })
            .collect();
        Ok(ExistenceReport {
            equations,
            rho: rho.clone(),
            k0: k0 + 1,
            mu_k0,
            delta,
            rho0,
            lower_bound: check,
            inequalities: ineq,
            verdict,
            conclusion,
            notes,
        })
    }
}

/// Checks the hypotheses of the existence test at the parameters of `spec`.
pub fn check_existence<T: Real>(spec: &SystemSpec<T>, radii: &Radii, constants: &[EquationConstants], search: &SearchOptions) -> Result<ExistenceReport, AnalysisError> {
    ExistencePrep::new(spec, radii, constants, search)?.evaluate(&spec.lambdas(), &spec.etas())
}
