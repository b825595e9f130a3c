use thiserror::Error;

use super::arith::{Arith, Scalar};
use super::interval::Interval;
use super::{BinOp, Expr, Func};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("evaluation of '{subexpr}' failed: {reason}")]
pub struct EvalError {
    pub subexpr: String,
    pub reason: String,
}

fn fail(e: &Expr, reason: &str) -> EvalError {
    EvalError {
        subexpr: e.to_string(),
        reason: reason.to_string(),
    }
}

/// Variable lookup for the evaluator.
pub trait Vars<A> {
    fn x(&self, l: usize) -> Option<A>;
    fn z(&self, j: usize) -> Option<A>;
    fn w(&self, j: usize, l: usize) -> Option<A>;
    fn n(&self) -> usize;
}

/// Variables stored in slices; `w` is row-major `m x n`.
pub struct SliceVars<'a, A> {
    pub x: &'a [A],
    pub z: &'a [A],
    pub w: &'a [A],
    pub n: usize,
}

impl<A: Clone> Vars<A> for SliceVars<'_, A> {
    fn x(&self, l: usize) -> Option<A> {
        self.x.get(l).cloned()
    }
    fn z(&self, j: usize) -> Option<A> {
        self.z.get(j).cloned()
    }
    fn w(&self, j: usize, l: usize) -> Option<A> {
        if l >= self.n {
            return None;
        }
        self.w.get(j * self.n + l).cloned()
    }
    fn n(&self) -> usize {
        self.n
    }
}

struct RealVars<'a, T> {
    x: &'a [T],
    z: &'a [T],
    w: &'a [T],
    n: usize,
}

impl<T: Real> Vars<Scalar<T>> for RealVars<'_, T> {
    fn x(&self, l: usize) -> Option<Scalar<T>> {
        self.x.get(l).map(|&v| Scalar(v))
    }
    fn z(&self, j: usize) -> Option<Scalar<T>> {
        self.z.get(j).map(|&v| Scalar(v))
    }
    fn w(&self, j: usize, l: usize) -> Option<Scalar<T>> {
        if l >= self.n {
            return None;
        }
        self.w.get(j * self.n + l).map(|&v| Scalar(v))
    }
    fn n(&self) -> usize {
        self.n
    }
}

fn integer_exponent(e: &Expr) -> Option<i32> {
    match e {
        Expr::Num(v) if v.fract() == 0.0 && *v <= 64.0 => Some(*v as i32),
        Expr::Neg(inner) => integer_exponent(inner).map(|k| -k),
        _ => None,
    }
}

fn missing(e: &Expr) -> EvalError {
    fail(e, "variable not supplied")
}

/// Evaluates `e` on any [`Arith`] type.
pub fn eval_vars<A: Arith, V: Vars<A>>(e: &Expr, vars: &V) -> Result<A, EvalError> {
    let r = match e {
        Expr::Num(v) => A::constant(*v),
        Expr::Pi => A::constant(std::f64::consts::PI),
        Expr::X(l) => vars.x(*l).ok_or_else(|| missing(e))?,
        Expr::Z(j) => vars.z(*j).ok_or_else(|| missing(e))?,
        Expr::W(j, l) => vars.w(*j, *l).ok_or_else(|| missing(e))?,
        Expr::Neg(a) => eval_vars(a, vars)?.neg(),
        Expr::Bin(op, a, b) => {
            let x = eval_vars(a, vars)?;
            match op {
                BinOp::Add => x.add(&eval_vars(b, vars)?),
                BinOp::Sub => x.sub(&eval_vars(b, vars)?),
                BinOp::Mul => x.mul(&eval_vars(b, vars)?),
                BinOp::Div => x.div(&eval_vars(b, vars)?).map_err(|r| fail(e, r))?,
                BinOp::Pow => match integer_exponent(b) {
                    Some(k) => x.powi(k).map_err(|r| fail(e, r))?,
                    None => x.powf(&eval_vars(b, vars)?).map_err(|r| fail(e, r))?,
                },
            }
        }
        Expr::Call(f, args) => {
            let a = eval_vars(&args[0], vars)?;
            match f {
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Abs => a.abs(),
                Func::Sqrt => a.sqrt().map_err(|r| fail(e, r))?,
                Func::Min => a.min(&eval_vars(&args[1], vars)?),
                Func::Max => a.max(&eval_vars(&args[1], vars)?),
            }
        }
        Expr::Norm(j) => {
            let n = vars.n();
            let mut acc = A::constant(0.0);
            for l in 0..n {
                acc = acc.max(&vars.w(*j, l).ok_or_else(|| missing(e))?.abs());
            }
            acc
        }
        Expr::NormSq2(j) => {
            let mut acc = A::constant(0.0);
            for l in 0..vars.n() {
                let v = vars.w(*j, l).ok_or_else(|| missing(e))?;
                acc = acc.add(&v.powi(2).map_err(|r| fail(e, r))?);
            }
            acc
        }
        Expr::Dot(j, k) => {
            let mut acc = A::constant(0.0);
            for l in 0..vars.n() {
                let a = vars.w(*j, l).ok_or_else(|| missing(e))?;
                let b = vars.w(*k, l).ok_or_else(|| missing(e))?;
                acc = acc.add(&a.mul(&b));
            }
            acc
        }
    };
    if !r.is_valid() {
        return Err(fail(e, "result is not a finite number"));
    }
    Ok(r)
}

/// Evaluates `e` with variables given as slices of `A`.
pub fn eval_generic<A: Arith>(e: &Expr, x: &[A], z: &[A], w: &[A], n: usize) -> Result<A, EvalError> {
    eval_vars(e, &SliceVars { x, z, w, n })
}

/// Evaluates `e` at a point; `w` is row-major `m x n` with `n = x.len()`.
pub fn eval_expr<T: Real>(e: &Expr, x: &[T], z: &[T], w: &[T]) -> Result<T, EvalError> {
    let v = eval_vars(
        e,
        &RealVars {
            x,
            z,
            w,
            n: x.len(),
        },
    )?;
    Ok(v.0)
}

/// Box of variable ranges for interval evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct VarBox<T> {
    pub x: Vec<Interval<T>>,
    pub z: Vec<Interval<T>>,
    /// Row-major `m x n`.
    pub w: Vec<Interval<T>>,
    pub n: usize,
}

impl<T: Real> VarBox<T> {
    /// `x` in the given bounds, `z_j` in `[0, rho_j]`, `w[j][l]` in `[-rho_j, rho_j]`.
    pub fn standard(xlo: &[T], xhi: &[T], rho: &[T]) -> Self {
        let n = xlo.len();
        VarBox {
            x: xlo.iter().zip(xhi).map(|(&a, &b)| Interval::new(a, b)).collect(),
            z: rho.iter().map(|&r| Interval::new(T::zero(), r)).collect(),
            w: rho
                .iter()
                .flat_map(|&r| std::iter::repeat_n(Interval::new(-r, r), n))
                .collect(),
            n,
        }
    }
}

/// Conservative enclosure of `e` over `bx`.
pub fn interval_bound<T: Real>(e: &Expr, bx: &VarBox<T>) -> Result<Interval<T>, EvalError> {
    eval_generic(e, &bx.x, &bx.z, &bx.w, bx.n)
}
