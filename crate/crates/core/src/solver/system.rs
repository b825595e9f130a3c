use std::sync::Arc;

use thiserror::Error;

use crate::expr::{eval_expr, eval_functional, Dims, EvalError, Expr, FieldSet, FunctionalError, FunctionalExpr};
use crate::green::{GreenError, GreenSystem};
use crate::mesh::{DiscreteDomain, ScalarField};
use crate::operator::OperatorSpec;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("equation {k}: {source}")]
    Green { k: usize, source: GreenError },
    #[error("equation {k}, node {node}: {source}")]
    Eval { k: usize, node: usize, source: EvalError },
    #[error("equation {k}: {source}")]
    Functional { k: usize, source: FunctionalError },
    #[error("invalid system: {0}")]
    Invalid(String),
}

/// One equation `L_k u_k = lambda_k f_k(x, u, Du)` with boundary values
/// `u_k = eta_k zeta_k h_k[u]`.
#[derive(Clone, Debug)]
pub struct Equation<T: Real> {
    pub operator: OperatorSpec<T>,
    pub f: Expr,
    pub h: FunctionalExpr,
    /// Boundary profile; an expression in `x` only.
    pub zeta: Expr,
    pub lambda: f64,
    pub eta: f64,
}

/// A system of `m` equations on a shared domain.
#[derive(Clone, Debug)]
pub struct SystemSpec<T: Real> {
    pub dom: Arc<DiscreteDomain<T>>,
    pub equations: Vec<Equation<T>>,
}

impl<T: Real> SystemSpec<T> {
    pub fn m(&self) -> usize {
        self.equations.len()
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n: self.dom.dim(),
            m: self.m(),
        }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.equations.iter().map(|e| e.lambda).collect()
    }

    pub fn etas(&self) -> Vec<f64> {
        self.equations.iter().map(|e| e.eta).collect()
    }

    /// Copy with replaced parameters.
    pub fn with_params(&self, lambda: &[f64], eta: &[f64]) -> Self {
        let mut s = self.clone();
        for (k, e) in s.equations.iter_mut().enumerate() {
            e.lambda = lambda[k];
            e.eta = eta[k];
        }
        s
    }

    /// Boundary values of `zeta_k`, indexed by boundary position.
    pub fn zeta_values(&self, k: usize) -> Result<Vec<T>, SolverError> {
        let dom = &self.dom;
        (dom.n_interior()..dom.n_nodes())
            .map(|node| {
                eval_expr(&self.equations[k].zeta, dom.coord(node), &[], &[]).map_err(|source| SolverError::Eval { k: k + 1, node, source })
            })
            .collect()
    }

    /// Structural checks: sizes, indices, `lambda, eta >= 0`, `zeta >= 0`.
    pub fn validate(&self) -> Result<(), SolverError> {
        let Dims { n, m } = self.dims();
        if m == 0 {
            return Err(SolverError::Invalid("no equations".into()));
        }
        for (k, e) in self.equations.iter().enumerate() {
            let k1 = k + 1;
            if e.operator.dim != n {
                return Err(SolverError::Invalid(format!("equation {k1}: operator dimension {} != domain dimension {n}", e.operator.dim)));
            }
            if !(e.lambda >= 0.0 && e.lambda.is_finite()) || !(e.eta >= 0.0 && e.eta.is_finite()) {
                return Err(SolverError::Invalid(format!("equation {k1}: lambda and eta must be finite and non-negative")));
            }
            let check = |what: &str, u: crate::expr::VarUse| -> Result<(), SolverError> {
                if u.x.iter().any(|&l| l >= n) || u.z.iter().any(|&j| j >= m) || u.w.iter().any(|&(j, l)| j >= m || l >= n) {
                    return Err(SolverError::Invalid(format!("equation {k1}: {what} references a variable outside n = {n}, m = {m}")));
                }
                Ok(())
            };
            check("f", e.f.vars(n))?;
            check("h", e.h.vars(n))?;
            let zu = e.zeta.vars(n);
            check("zeta", zu.clone())?;
            if !zu.z.is_empty() || !zu.w.is_empty() {
                return Err(SolverError::Invalid(format!("equation {k1}: zeta may depend on x only")));
            }
            if !e.h.dims_ok(self.dims()) {
                return Err(SolverError::Invalid(format!("equation {k1}: point dimension of h does not match n = {n}")));
            }
            e.h.check_points(&self.dom).map_err(|source| SolverError::Functional { k: k1, source })?;
            let z = self.zeta_values(k)?;
            if let Some(b) = z.iter().position(|&v| v < T::zero()) {
                return Err(SolverError::Invalid(format!(
                    "equation {k1}: zeta = {} < 0 at boundary node {}",
                    z[b],
                    self.dom.n_interior() + b
                )));
            }
        }
        Ok(())
    }
}

/// A validated system with factorized operators and harmonic extensions.
pub struct System<T: Real> {
    pub spec: SystemSpec<T>,
    greens: Vec<Arc<GreenSystem<T>>>,
    zeta: Vec<Vec<T>>,
    gamma: Vec<ScalarField<T>>,
}

impl<T: Real> System<T> {
    /// Validates and factorizes; equations with equal operator keys share a
    /// factorization.
    pub fn build(spec: SystemSpec<T>) -> Result<Self, SolverError> {
        spec.validate()?;
        let mut greens: Vec<Arc<GreenSystem<T>>> = Vec::new();
        for (k, e) in spec.equations.iter().enumerate() {
            let shared = e.operator.key.as_ref().and_then(|key| {
                spec.equations[..k]
                    .iter()
                    .position(|p| p.operator.key.as_ref() == Some(key))
                    .map(|i| greens[i].clone())
            });
            let g = match shared {
                Some(g) => g,
                None => Arc::new(GreenSystem::new(spec.dom.clone(), &e.operator).map_err(|source| SolverError::Green { k: k + 1, source })?),
            };
            greens.push(g);
        }
        Self::with_greens(spec, greens)
    }

    /// Reuses already factorized operators (one per equation).
    pub fn with_greens(spec: SystemSpec<T>, greens: Vec<Arc<GreenSystem<T>>>) -> Result<Self, SolverError> {
        spec.validate()?;
        if greens.len() != spec.m() {
            return Err(SolverError::Invalid("one Green system per equation required".into()));
        }
        let mut zeta = Vec::new();
        let mut gamma = Vec::new();
        for k in 0..spec.m() {
            let z = spec.zeta_values(k)?;
            gamma.push(greens[k].harmonic_extension(&z).map_err(|source| SolverError::Green { k: k + 1, source })?);
            zeta.push(z);
        }
        Ok(System { spec, greens, zeta, gamma })
    }

    /// Same factorizations, new parameters.
    pub fn with_params(&self, lambda: &[f64], eta: &[f64]) -> Self {
        System {
            spec: self.spec.with_params(lambda, eta),
            greens: self.greens.clone(),
            zeta: self.zeta.clone(),
            gamma: self.gamma.clone(),
        }
    }

    pub fn dom(&self) -> &DiscreteDomain<T> {
        &self.spec.dom
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    pub fn green(&self, k: usize) -> &Arc<GreenSystem<T>> {
        &self.greens[k]
    }

    /// Index of the first equation sharing the factorization of `k`.
    pub fn green_owner(&self, k: usize) -> usize {
        (0..k).find(|&i| Arc::ptr_eq(&self.greens[i], &self.greens[k])).unwrap_or(k)
    }

    pub fn zeta(&self, k: usize) -> &[T] {
        &self.zeta[k]
    }

    pub fn gamma(&self, k: usize) -> &ScalarField<T> {
        &self.gamma[k]
    }

    /// Nemytskii operator: `f_k(x, u(x), Du(x))` at the interior nodes.
    pub fn nemytskii(&self, k: usize, fs: &FieldSet<T>) -> Result<Vec<T>, SolverError> {
        let dom = self.dom();
        let f = &self.spec.equations[k].f;
        (0..dom.n_interior())
            .map(|node| eval_expr(f, dom.coord(node), fs.z_at(node), fs.w_at(node)).map_err(|source| SolverError::Eval { k: k + 1, node, source }))
            .collect()
    }

    pub fn functional(&self, k: usize, fs: &FieldSet<T>) -> Result<T, SolverError> {
        eval_functional(&self.spec.equations[k].h, self.dom(), fs).map_err(|source| SolverError::Functional { k: k + 1, source })
    }
}
