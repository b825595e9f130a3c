use std::fmt;

use thiserror::Error;

use super::eval::{eval_expr, EvalError};
use super::{Dims, Expr, VarUse};
use crate::mesh::{DiscreteDomain, MeshError, ScalarField};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind {
    /// Evaluation at a point of the closed domain.
    PointVal(Vec<f64>),
    /// Integral over the domain.
    IntDom,
    /// Integral over the boundary.
    IntBnd,
    /// Maximum over the boundary.
    MaxBnd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub kernel: Kernel,
}

/// `constant + sum_i coeff_i * kernel_i`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FunctionalExpr {
    pub terms: Vec<Term>,
    pub constant: f64,
}

impl FunctionalExpr {
    pub fn vars(&self, n: usize) -> VarUse {
        let mut u = VarUse::default();
        for t in &self.terms {
            u.merge(&t.kernel.expr.vars(n));
        }
        u
    }

    pub fn check_points<T: Real>(&self, dom: &DiscreteDomain<T>) -> Result<(), FunctionalError> {
        for t in &self.terms {
            if let KernelKind::PointVal(p) = &t.kernel.kind {
                let pt: Vec<T> = p.iter().map(|&v| T::lit(v)).collect();
                let tol = T::lit(1e-9) * (T::one() + dom.diameter());
                if !dom.contains(&pt, tol) {
                    return Err(FunctionalError::Mesh(MeshError::OutsideDomain(p.clone())));
                }
            }
        }
        Ok(())
    }

    pub fn dims_ok(&self, dims: Dims) -> bool {
        self.terms.iter().all(|t| match &t.kernel.kind {
            KernelKind::PointVal(p) => p.len() == dims.n,
            _ => true,
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KernelKind::PointVal(p) => {
                write!(f, "pointval({}, (", self.expr)?;
                for (i, v) in p.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                write!(f, "))")
            }
            KernelKind::IntDom => write!(f, "intdom({})", self.expr),
            KernelKind::IntBnd => write!(f, "intbnd({})", self.expr),
            KernelKind::MaxBnd => write!(f, "maxbnd({})", self.expr),
        }
    }
}

impl fmt::Display for FunctionalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut piece = |f: &mut fmt::Formatter<'_>, c: f64, body: Option<&Kernel>| -> fmt::Result {
            let neg = c.is_sign_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let a = c.abs();
            match body {
                Some(k) if a == 1.0 => write!(f, "{k}"),
                Some(k) => write!(f, "{a:?}*{k}"),
                None => write!(f, "{a:?}"),
            }
        };
        for t in &self.terms {
            piece(f, t.coeff, Some(&t.kernel))?;
        }
        if self.constant != 0.0 || self.terms.is_empty() {
            piece(f, self.constant, None)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("field set has {got} fields, expected {expected}")]
    FieldCount { got: usize, expected: usize },
}

/// Node values and gradients of `m` fields on a domain.
#[derive(Clone, Debug)]
pub struct FieldSet<T> {
    pub n: usize,
    pub m: usize,
    /// `z[node * m + j]`.
    pub z: Vec<T>,
    /// `w[node * m * n + j * n + l]`.
    pub w: Vec<T>,
}

impl<T: Real> FieldSet<T> {
    /// Packs fields and their discrete gradients.
    pub fn new(dom: &DiscreteDomain<T>, fields: &[ScalarField<T>]) -> Self {
        let n = dom.dim();
        let m = fields.len();
        let nn = dom.n_nodes();
        let grads: Vec<_> = fields.iter().map(|u| dom.gradient(u)).collect();
        let mut z = vec![T::zero(); nn * m];
        let mut w = vec![T::zero(); nn * m * n];
        for node in 0..nn {
            for j in 0..m {
                z[node * m + j] = fields[j].values[node];
                w[node * m * n + j * n..node * m * n + (j + 1) * n].copy_from_slice(grads[j].at(node));
            }
        }
        FieldSet { n, m, z, w }
    }

    /// Constant fields (zero gradients).
    pub fn constant(dom: &DiscreteDomain<T>, values: &[T]) -> Self {
        let fields: Vec<_> = values.iter().map(|&v| ScalarField::constant(dom, v)).collect();
        let mut fs = Self::new(dom, &fields);
        fs.w.iter_mut().for_each(|v| *v = T::zero());
        fs
    }

    pub fn z_at(&self, node: usize) -> &[T] {
        &self.z[node * self.m..(node + 1) * self.m]
    }

    pub fn w_at(&self, node: usize) -> &[T] {
        let k = self.m * self.n;
        &self.w[node * k..(node + 1) * k]
    }

    pub fn n_nodes(&self) -> usize {
        self.z.len().checked_div(self.m).unwrap_or(0)
    }
}

/// Evaluates `h[u]` for the packed fields.
pub fn eval_functional<T: Real>(
    h: &FunctionalExpr,
    dom: &DiscreteDomain<T>,
    fs: &FieldSet<T>,
) -> Result<T, FunctionalError> {
    if fs.n_nodes() != dom.n_nodes() && fs.m > 0 {
        return Err(FunctionalError::FieldCount {
            got: fs.n_nodes(),
            expected: dom.n_nodes(),
        });
    }
    let mut total = T::lit(h.constant);
    let n_int = dom.n_interior();
    for t in &h.terms {
        let e = &t.kernel.expr;
        let at = |node: usize| eval_expr(e, dom.coord(node), fs.z_at(node), fs.w_at(node));
        let v = match &t.kernel.kind {
            KernelKind::PointVal(p) => {
                let pt: Vec<T> = p.iter().map(|&v| T::lit(v)).collect();
                let st = dom.interpolation_stencil(&pt)?;
                let mut z = vec![T::zero(); fs.m];
                let mut w = vec![T::zero(); fs.m * fs.n];
                for &(node, wt) in &st {
                    for (a, &b) in z.iter_mut().zip(fs.z_at(node)) {
                        *a += wt * b;
                    }
                    for (a, &b) in w.iter_mut().zip(fs.w_at(node)) {
                        *a += wt * b;
                    }
                }
                eval_expr(e, &pt, &z, &w)?
            }
            KernelKind::IntDom => {
                let wts = dom.volume_weights();
                let mut s = T::zero();
                for (node, &wt) in wts.iter().enumerate() {
                    s += wt * at(node)?;
                }
                s
            }
            KernelKind::IntBnd => {
                let wts = dom.surface_weights();
                let mut s = T::zero();
                for (b, &wt) in wts.iter().enumerate() {
                    s += wt * at(n_int + b)?;
                }
                s
            }
            KernelKind::MaxBnd => {
                let mut s = T::neg_infinity();
                for node in n_int..dom.n_nodes() {
                    s = s.max(at(node)?);
                }
                s
            }
        };
        total += T::lit(t.coeff) * v;
    }
    Ok(total)
}
