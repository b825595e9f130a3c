//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | 'x'i | 'z'j | 'w[' j '][' l ']'
//!          | func '(' expr (',' expr)* ')'
//!          | 'norm(' j ')' | 'normsq2(' j ')' | 'dot(' j ',' k ')'
//!          | '(' expr ')'
//!
//! functional := ('+' | '-')? fterm (('+' | '-') fterm)*
//! fterm      := ffactor (('*' | '/') ffactor)*
//! ffactor    := kernel | unary            (unary must be constant)
//! kernel     := 'pointval(' expr ',' '(' const (',' const)* ')' ')'
//!             | ('intdom' | 'intbnd' | 'maxbnd') '(' expr ')'
//! ```

use super::arith::Scalar;
use super::eval::eval_generic;
use super::functional::{FunctionalExpr, Kernel, KernelKind, Term};
use super::{BinOp, Dims, Expr, Func, ParseError};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LBrack => "'['".into(),
        Tok::RBrack => "']'".into(),
        Tok::Comma => "','".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::End => "end of input".into(),
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let simple = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBrack),
            b']' => Some(Tok::RBrack),
            b',' => Some(Tok::Comma),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit()) {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' {
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let v: f64 = text[start..i]
                .parse()
                .map_err(|_| syntax(start, "malformed number"))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(syntax(start, format!("unexpected character '{ch}'")));
    }
    out.push((Tok::End, b.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dims: Dims,
    constant_only: bool,
}

const KERNELS: [&str; 4] = ["pointval", "intdom", "intbnd", "maxbnd"];

impl Parser {
    fn new(text: &str, dims: Dims) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            dims,
            constant_only: false,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.offset(),
                format!("expected {}, found {}", describe(&t), describe(self.peek())),
            ))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(syntax(
                self.offset(),
                format!("unexpected {}", describe(self.peek())),
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, e));
        }
        Ok(base)
    }

    /// A 1-based index literal checked against `max`.
    fn index(&mut self, name: &str, max: usize) -> Result<usize, ParseError> {
        let off = self.offset();
        match self.bump().0 {
            Tok::Num(v) if v.fract() == 0.0 && v >= 0.0 => {
                let k = v as usize;
                if k == 0 || k > max {
                    return Err(ParseError::IndexOutOfRange {
                        offset: off,
                        name: name.into(),
                        index: k,
                        max,
                    });
                }
                Ok(k - 1)
            }
            t => Err(syntax(off, format!("expected an index, found {}", describe(&t)))),
        }
    }

    fn variable_guard(&self, off: usize, name: &str) -> Result<(), ParseError> {
        if self.constant_only {
            return Err(syntax(off, format!("'{name}' is not allowed in a constant")));
        }
        Ok(())
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let off = self.offset();
        let (tok, _) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, off),
            Tok::End => Err(syntax(off, "expected an expression, found end of input")),
            t => Err(syntax(off, format!("expected an expression, found {}", describe(&t)))),
        }
    }

    fn ident(&mut self, name: String, off: usize) -> Result<Expr, ParseError> {
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if let Some(f) = Func::from_name(&name) {
            self.expect(Tok::LParen)?;
            let mut args = vec![self.expr()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen)?;
            if args.len() != f.arity() {
                return Err(syntax(
                    off,
                    format!("{} takes {} argument(s), got {}", name, f.arity(), args.len()),
                ));
            }
            return Ok(Expr::Call(f, args));
        }
        let (n, m) = (self.dims.n, self.dims.m);
        match name.as_str() {
            "norm" | "normsq2" => {
                self.variable_guard(off, &name)?;
                self.expect(Tok::LParen)?;
                let j = self.index(&name, m)?;
                self.expect(Tok::RParen)?;
                return Ok(if name == "norm" { Expr::Norm(j) } else { Expr::NormSq2(j) });
            }
            "dot" => {
                self.variable_guard(off, &name)?;
                self.expect(Tok::LParen)?;
                let j = self.index(&name, m)?;
                self.expect(Tok::Comma)?;
                let k = self.index(&name, m)?;
                self.expect(Tok::RParen)?;
                return Ok(Expr::Dot(j, k));
            }
            "w" => {
                self.variable_guard(off, &name)?;
                self.expect(Tok::LBrack)?;
                let j = self.index("w", m)?;
                self.expect(Tok::RBrack)?;
                self.expect(Tok::LBrack)?;
                let l = self.index("w", n)?;
                self.expect(Tok::RBrack)?;
                return Ok(Expr::W(j, l));
            }
            _ => {}
        }
        let (head, digits) = name.split_at(1);
        if (head == "x" || head == "z") && !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
            self.variable_guard(off, &name)?;
            let k: usize = digits.parse().unwrap_or(0);
            let max = if head == "x" { n } else { m };
            if k == 0 || k > max {
                return Err(ParseError::IndexOutOfRange {
                    offset: off,
                    name: head.into(),
                    index: k,
                    max,
                });
            }
            return Ok(if head == "x" { Expr::X(k - 1) } else { Expr::Z(k - 1) });
        }
        Err(ParseError::UnknownIdent { offset: off, name })
    }

    /// A constant sub-expression, evaluated immediately.
    fn constant(&mut self) -> Result<f64, ParseError> {
        let off = self.offset();
        let saved = self.constant_only;
        self.constant_only = true;
        let e = self.unary();
        self.constant_only = saved;
        let e = e?;
        let v: Scalar<f64> = eval_generic(&e, &[], &[], &[], 0)
            .map_err(|err| syntax(off, format!("constant does not evaluate: {err}")))?;
        Ok(v.0)
    }

    fn functional(&mut self) -> Result<FunctionalExpr, ParseError> {
        let mut out = FunctionalExpr::default();
        let mut sign = 1.0;
        match self.peek() {
            Tok::Minus => {
                self.bump();
                sign = -1.0;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let (coeff, kernel) = self.fterm()?;
            match kernel {
                Some(kernel) => out.terms.push(Term {
                    coeff: sign * coeff,
                    kernel,
                }),
                None => out.constant += sign * coeff,
            }
            sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.bump();
        }
        Ok(out)
    }

    fn fterm(&mut self) -> Result<(f64, Option<Kernel>), ParseError> {
        let mut coeff = 1.0;
        let mut kernel: Option<Kernel> = None;
        let mut first = true;
        loop {
            let divide = if first {
                false
            } else {
                match self.peek() {
                    Tok::Star => {
                        self.bump();
                        false
                    }
                    Tok::Slash => {
                        self.bump();
                        true
                    }
                    _ => break,
                }
            };
            first = false;
            let off = self.offset();
            if let Tok::Ident(name) = self.peek().clone() {
                if KERNELS.contains(&name.as_str()) {
                    if divide {
                        return Err(syntax(off, "cannot divide by a functional term"));
                    }
                    if kernel.is_some() {
                        return Err(syntax(off, "product of two functional terms"));
                    }
                    self.bump();
                    kernel = Some(self.kernel(&name)?);
                    continue;
                }
            }
            let c = self.constant()?;
            if divide {
                if c == 0.0 {
                    return Err(syntax(off, "division by zero in a coefficient"));
                }
                coeff /= c;
            } else {
                coeff *= c;
            }
        }
        if !coeff.is_finite() {
            return Err(syntax(self.offset(), "coefficient is not finite"));
        }
        Ok((coeff, kernel))
    }

    fn kernel(&mut self, name: &str) -> Result<Kernel, ParseError> {
        self.expect(Tok::LParen)?;
        let expr = self.expr()?;
        let kind = match name {
            "pointval" => {
                self.expect(Tok::Comma)?;
                let off = self.offset();
                self.expect(Tok::LParen)?;
                let mut p = vec![self.constant_expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    p.push(self.constant_expr()?);
                }
                self.expect(Tok::RParen)?;
                if p.len() != self.dims.n {
                    return Err(syntax(
                        off,
                        format!("point has {} coordinates, expected {}", p.len(), self.dims.n),
                    ));
                }
                KernelKind::PointVal(p)
            }
            "intdom" => KernelKind::IntDom,
            "intbnd" => KernelKind::IntBnd,
            _ => KernelKind::MaxBnd,
        };
        self.expect(Tok::RParen)?;
        Ok(Kernel { kind, expr })
    }

    fn constant_expr(&mut self) -> Result<f64, ParseError> {
        let off = self.offset();
        let saved = self.constant_only;
        self.constant_only = true;
        let e = self.expr();
        self.constant_only = saved;
        let e = e?;
        let v: Scalar<f64> = eval_generic(&e, &[], &[], &[], 0)
            .map_err(|err| syntax(off, format!("constant does not evaluate: {err}")))?;
        Ok(v.0)
    }
}

/// Parses an expression over `x1..xn`, `z1..zm`, `w[j][l]`.
pub fn parse_expr(text: &str, dims: Dims) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text, dims)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a boundary functional.
pub fn parse_functional(text: &str, dims: Dims) -> Result<FunctionalExpr, ParseError> {
    let mut p = Parser::new(text, dims)?;
    let f = p.functional()?;
    p.finish()?;
    Ok(f)
}

/// Parses and evaluates a constant expression such as `sqrt(pi/6)`.
pub fn parse_constant(text: &str) -> Result<f64, ParseError> {
    let mut p = Parser::new(text, Dims { n: 0, m: 0 })?;
    let v = p.constant_expr()?;
    p.finish()?;
    Ok(v)
}
