//! Expression language for nonlinearities `f(x, z, w)` and boundary
//! functionals `h[u]`.
//!
//! Variables: `x1..xn` (position), `z1..zm` (field values), `w[j][l]`
//! (component `l` of the gradient of field `j`). Vector helpers: `norm(j)`
//! is the max norm of the gradient of field `j`, `normsq2(j)` its squared
//! Euclidean norm and `dot(j,k)` the Euclidean inner product of two
//! gradients. Indices are 1-based in text and 0-based in the tree.

use std::fmt;

use thiserror::Error;

mod arith;
mod dual;
mod eval;
mod functional;
mod interval;
mod parse;

pub use arith::{Arith, Scalar};
pub use dual::IDual;
pub use eval::{eval_expr, eval_generic, eval_vars, interval_bound, EvalError, SliceVars, VarBox, Vars};
pub use functional::{eval_functional, FieldSet, FunctionalError, FunctionalExpr, Kernel, KernelKind, Term};
pub use interval::Interval;
pub use parse::{parse_constant, parse_expr, parse_functional};

/// Declared sizes: spatial dimension `n` and number of fields `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

/// Expression tree. Literals are non-negative; negation is explicit.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    X(usize),
    Z(usize),
    W(usize, usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Norm(usize),
    NormSq2(usize),
    Dot(usize, usize),
}

/// Variables referenced by an expression.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarUse {
    pub x: Vec<usize>,
    pub z: Vec<usize>,
    /// `(j, l)` pairs.
    pub w: Vec<(usize, usize)>,
}

impl VarUse {
    fn add_x(&mut self, l: usize) {
        if !self.x.contains(&l) {
            self.x.push(l);
        }
    }
    fn add_z(&mut self, j: usize) {
        if !self.z.contains(&j) {
            self.z.push(j);
        }
    }
    fn add_w(&mut self, j: usize, l: usize) {
        if !self.w.contains(&(j, l)) {
            self.w.push((j, l));
        }
    }

    fn sort(&mut self) {
        self.x.sort_unstable();
        self.z.sort_unstable();
        self.w.sort_unstable();
    }

    pub fn merge(&mut self, o: &VarUse) {
        o.x.iter().for_each(|&l| self.add_x(l));
        o.z.iter().for_each(|&j| self.add_z(j));
        o.w.iter().for_each(|&(j, l)| self.add_w(j, l));
        self.sort();
    }

    pub fn uses_gradient(&self) -> bool {
        !self.w.is_empty()
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Variables used; `n` is needed to expand the vector helpers.
    pub fn vars(&self, n: usize) -> VarUse {
        let mut u = VarUse::default();
        self.collect(n, &mut u);
        u.sort();
        u
    }

    fn collect(&self, n: usize, u: &mut VarUse) {
        match self {
            Expr::Num(_) | Expr::Pi => {}
            Expr::X(l) => u.add_x(*l),
            Expr::Z(j) => u.add_z(*j),
            Expr::W(j, l) => u.add_w(*j, *l),
            Expr::Neg(a) => a.collect(n, u),
            Expr::Bin(_, a, b) => {
                a.collect(n, u);
                b.collect(n, u);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect(n, u)),
            Expr::Norm(j) | Expr::NormSq2(j) => (0..n).for_each(|l| u.add_w(*j, l)),
            Expr::Dot(j, k) => (0..n).for_each(|l| {
                u.add_w(*j, l);
                u.add_w(*k, l);
            }),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.vars(1) == VarUse::default()
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::X(l) => write!(f, "x{}", l + 1),
            Expr::Z(j) => write!(f, "z{}", j + 1),
            Expr::W(j, l) => write!(f, "w[{}][{}]", j + 1, l + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, lmin, rmin) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                a.fmt_prec(f, lmin)?;
                write!(f, "{sym}")?;
                b.fmt_prec(f, rmin)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.fmt_prec(f, 0)?;
                }
                write!(f, ")")
            }
            Expr::Norm(j) => write!(f, "norm({})", j + 1),
            Expr::NormSq2(j) => write!(f, "normsq2({})", j + 1),
            Expr::Dot(j, k) => write!(f, "dot({}, {})", j + 1, k + 1),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("index {index} of '{name}' at offset {offset} is out of range 1..={max}")]
    IndexOutOfRange {
        offset: usize,
        name: String,
        index: usize,
        max: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdent { offset, .. }
            | ParseError::IndexOutOfRange { offset, .. } => *offset,
        }
    }
}
