//! Run configuration: a small INI dialect with typed sections.
//!
//! ```text
//! [domain]
//! kind = ball
//! dim = 3
//! h = 1/16
//!
//! [equation.1]
//! f = "exp(z1)"
//! lambda = 0.05
//! ```
//!
//! Values may be quoted. Numeric values accept constant expressions such as
//! `sqrt(pi/6)`. See `docs/config.md` for the full schema.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use ellipcert::analysis::{Radii, Range, ScanGrid};
use ellipcert::expr::{eval_expr, parse_constant, parse_expr, parse_functional, Dims, Expr, FunctionalExpr};
use ellipcert::mesh::{DiscreteDomain, DomainKind, DomainSpec};
use ellipcert::operator::{Coef, OperatorSpec};
use ellipcert::solver::{Equation, SolveOptions, Start, SystemSpec};
use ellipcert::Real;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{message}", location(.section, .line))]
pub struct ConfigError {
    pub section: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

fn location(section: &Option<String>, line: &Option<usize>) -> String {
    match (section, line) {
        (Some(s), Some(l)) => format!("[{s}] line {l}: "),
        (Some(s), None) => format!("[{s}]: "),
        (None, Some(l)) => format!("line {l}: "),
        (None, None) => String::new(),
    }
}

fn err(section: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        section: Some(section.to_string()),
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub dim: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub h: f64,
}

impl DomainConfig {
    pub fn spec<T: Real>(&self) -> DomainSpec<T> {
        let v = |xs: &[f64]| xs.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        DomainSpec {
            kind: self.kind,
            dim: self.dim,
            center: v(&self.center),
            radius: T::lit(self.radius),
            lower: v(&self.lower),
            upper: v(&self.upper),
            h: T::lit(self.h),
        }
    }

    /// Sample points on the continuous boundary.
    fn boundary_samples(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut out = Vec::new();
        match self.kind {
            DomainKind::Ball => {
                for l in 0..n {
                    for s in [-1.0, 1.0] {
                        let mut p = self.center.clone();
                        p[l] += s * self.radius;
                        out.push(p);
                    }
                }
                let diag = self.radius / (n as f64).sqrt();
                for mask in 0..(1usize << n) {
                    out.push((0..n).map(|l| self.center[l] + if mask >> l & 1 == 1 { diag } else { -diag }).collect());
                }
            }
            DomainKind::Box | DomainKind::Interval => {
                for mask in 0..(1usize << n) {
                    out.push((0..n).map(|l| if mask >> l & 1 == 1 { self.upper[l] } else { self.lower[l] }).collect());
                }
                for l in 0..n {
                    for end in [self.lower[l], self.upper[l]] {
                        let mut p: Vec<f64> = (0..n).map(|i| 0.5 * (self.lower[i] + self.upper[i])).collect();
                        p[l] = end;
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Coefficients as expressions in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorConfig {
    /// Row-major `dim x dim`.
    pub a: Vec<Expr>,
    pub b: Vec<Expr>,
    pub c: Vec<Expr>,
    pub d: Expr,
}

impl OperatorConfig {
    pub fn laplacian(n: usize) -> Self {
        OperatorConfig {
            a: (0..n * n).map(|k| Expr::num(if k / n == k % n { 1.0 } else { 0.0 })).collect(),
            b: vec![Expr::num(0.0); n],
            c: vec![Expr::num(0.0); n],
            d: Expr::num(0.0),
        }
    }

    fn key(&self) -> String {
        let j = |v: &[Expr]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",");
        format!("a={};b={};c={};d={}", j(&self.a), j(&self.b), j(&self.c), self.d)
    }

    pub fn spec<T: Real>(&self, n: usize) -> OperatorSpec<T> {
        let coef = |e: &Expr| -> Coef<T> {
            let e = e.clone();
            Arc::new(move |x: &[T]| eval_expr(&e, x, &[], &[]).unwrap_or(T::nan()))
        };
        OperatorSpec {
            dim: n,
            a: self.a.iter().map(coef).collect(),
            b: self.b.iter().map(coef).collect(),
            c: self.c.iter().map(coef).collect(),
            d: coef(&self.d),
            symmetric: self.b == self.c,
            key: Some(self.key()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquationConfig {
    pub operator: OperatorConfig,
    pub f: Expr,
    pub lambda: f64,
    pub h: FunctionalExpr,
    pub zeta: Expr,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub divergence: f64,
    pub start: Start,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        SolveConfig {
            tol: d.tol,
            max_iter: d.max_iter,
            damping: d.damping,
            divergence: d.divergence,
            start: Start::Zero,
        }
    }
}

impl SolveConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            divergence: self.divergence,
            radii: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsConfig {
    pub samples: usize,
    pub full_sweep_limit: usize,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
    /// Sources for `validate-green`.
    pub sources: usize,
    /// Exclusion radius in cells for `validate-green`.
    pub exclusion: f64,
    pub seed: u64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            samples: 512,
            full_sweep_limit: 10_000,
            eigen_tol: 1e-8,
            eigen_max_iter: 10_000,
            sources: 16,
            exclusion: 4.0,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub precision: Precision,
    pub domain: DomainConfig,
    pub equations: Vec<EquationConfig>,
    pub radii: Option<Radii>,
    pub solve: SolveConfig,
    pub scan: Option<ScanGrid>,
    pub threads: usize,
    pub constants: ConstantsConfig,
}

impl RunConfig {
    pub fn m(&self) -> usize {
        self.equations.len()
    }

    pub fn dims(&self) -> Dims {
        Dims {
            n: self.domain.dim,
            m: self.m(),
        }
    }

    /// Discretizes the domain and assembles the system specification.
    pub fn system<T: Real>(&self) -> Result<SystemSpec<T>, String> {
        let dom = DiscreteDomain::new(&self.domain.spec::<T>()).map_err(|e| format!("domain: {e}"))?;
        let n = self.domain.dim;
        Ok(SystemSpec {
            dom: Arc::new(dom),
            equations: self
                .equations
                .iter()
                .map(|e| Equation {
                    operator: e.operator.spec(n),
                    f: e.f.clone(),
                    h: e.h.clone(),
                    zeta: e.zeta.clone(),
                    lambda: e.lambda,
                    eta: e.eta,
                })
                .collect(),
        })
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some((k, e)) => Err(err(&self.name, Some(e.line), format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let v = parse_constant(&e.value).map_err(|x| err(&self.name, Some(e.line), format!("{key}: {x}")))?;
        if !v.is_finite() {
            return Err(err(&self.name, Some(e.line), format!("{key} is not finite")));
        }
        Ok(Some(v))
    }

    fn integer(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        e.value
            .parse()
            .map(Some)
            .map_err(|_| err(&self.name, Some(e.line), format!("{key}: expected a non-negative integer, found '{}'", e.value)))
    }

    fn numbers(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let mut out = Vec::new();
        for part in split_top(&e.value, ',') {
            let v = parse_constant(part.trim()).map_err(|x| err(&self.name, Some(e.line), format!("{key}: {x}")))?;
            out.push(v);
        }
        Ok(Some((out, e.line)))
    }

    fn expr(&mut self, key: &str, dims: Dims) -> Result<Option<Expr>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        parse_expr(&e.value, dims).map(Some).map_err(|x| err(&self.name, Some(e.line), format!("{key}: {x}")))
    }

    fn exprs(&mut self, key: &str, dims: Dims, count: usize) -> Result<Option<Vec<Expr>>, ConfigError> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let mut out = Vec::new();
        for row in split_top(&e.value, ';') {
            for part in split_top(row, ',') {
                out.push(parse_expr(part.trim(), dims).map_err(|x| err(&self.name, Some(e.line), format!("{key}: {x}")))?);
            }
        }
        if out.len() != count {
            return Err(err(&self.name, Some(e.line), format!("{key}: expected {count} entries, found {}", out.len())));
        }
        Ok(Some(out))
    }
}

/// Splits at `sep` outside parentheses and brackets.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && (v.starts_with('"') && v.ends_with('"') || v.starts_with('\'') && v.ends_with('\'')) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Strips a `#` or `;` comment outside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quote = None;
    for (i, ch) in line.char_indices() {
        match (quote, ch) {
            (None, '"' | '\'') => quote = Some(ch),
            (Some(q), c) if c == q => quote = None,
            (None, '#') => return &line[..i],
            (None, ';') if line[..i].trim().is_empty() => return &line[..i],
            _ => {}
        }
    }
    line
}

fn lex(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError {
                    section: None,
                    line: Some(line),
                    message: format!("malformed section header '{s}'"),
                })?
                .trim()
                .to_string();
            if sections.iter().any(|x| x.name == name) {
                return Err(err(&name, Some(line), "duplicate section"));
            }
            sections.push(Section {
                name,
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(ConfigError {
                section: sections.last().map(|x| x.name.clone()),
                line: Some(line),
                message: format!("expected 'key = value', found '{s}'"),
            });
        };
        let Some(sec) = sections.last_mut() else {
            return Err(ConfigError {
                section: None,
                line: Some(line),
                message: "key outside of any section".into(),
            });
        };
        let key = k.trim().to_string();
        if sec.entries.contains_key(&key) {
            return Err(err(&sec.name, Some(line), format!("duplicate key '{key}'")));
        }
        sec.entries.insert(
            key,
            Entry {
                value: unquote(v).to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn take(sections: &mut Vec<Section>, name: &str) -> Option<Section> {
    sections.iter().position(|s| s.name == name).map(|i| sections.remove(i))
}

fn indexed(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.strip_prefix('.')?.parse().ok()
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut sections = lex(text)?;
    let (domain, precision) = parse_domain(take(&mut sections, "domain"))?;
    let n = domain.dim;
    let m = (1..).take_while(|k| sections.iter().any(|s| s.name == format!("equation.{k}"))).count();
    if m == 0 {
        return Err(err("equation.1", None, "missing section"));
    }
    for s in &sections {
        for prefix in ["equation", "operator", "bc"] {
            if let Some(k) = indexed(&s.name, prefix) {
                if k == 0 || k > m {
                    return Err(err(&s.name, Some(s.line), format!("index {k} outside 1..={m}")));
                }
            }
        }
    }
    let dims = Dims { n, m };
    let mut take = |name: &str| take(&mut sections, name);

    let mut equations = Vec::with_capacity(m);
    for k in 1..=m {
        let operator = match take(&format!("operator.{k}")) {
            Some(s) => parse_operator(s, n)?,
            None => OperatorConfig::laplacian(n),
        };
        let mut eq = take(&format!("equation.{k}")).expect("counted above");
        let name = eq.name.clone();
        let f = eq.expr("f", dims)?.ok_or_else(|| err(&name, None, "missing key 'f'"))?;
        let lambda = eq.number("lambda")?.unwrap_or(0.0);
        if lambda < 0.0 {
            return Err(err(&name, None, "lambda must be non-negative"));
        }
        eq.finish()?;
        let (h, zeta, eta) = match take(&format!("bc.{k}")) {
            Some(mut bc) => {
                let bname = bc.name.clone();
                let h = match bc.take("h") {
                    Some(e) => parse_functional(&e.value, dims).map_err(|x| err(&bname, Some(e.line), format!("h: {x}")))?,
                    None => FunctionalExpr::default(),
                };
                let zline = bc.entries.get("zeta").map(|e| e.line);
                let zeta = bc.expr("zeta", Dims { n, m: 0 })?.unwrap_or(Expr::num(1.0));
                for p in domain.boundary_samples() {
                    match eval_expr::<f64>(&zeta, &p, &[], &[]) {
                        Ok(v) if v >= 0.0 => {}
                        Ok(v) => return Err(err(&bname, zline, format!("zeta must be non-negative on the boundary, found {v} at {p:?}"))),
                        Err(e) => return Err(err(&bname, zline, format!("zeta: {e}"))),
                    }
                }
                let eta = bc.number("eta")?.unwrap_or(0.0);
                if eta < 0.0 {
                    return Err(err(&bname, None, "eta must be non-negative"));
                }
                bc.finish()?;
                (h, zeta, eta)
            }
            None => (FunctionalExpr::default(), Expr::num(1.0), 0.0),
        };
        equations.push(EquationConfig { operator, f, lambda, h, zeta, eta });
    }

    let radii = match take("radii") {
        Some(mut s) => {
            let name = s.name.clone();
            let (rho, line) = s.numbers("rho")?.ok_or_else(|| err(&name, None, "missing key 'rho'"))?;
            let rho = if rho.len() == 1 { vec![rho[0]; m] } else { rho };
            let r = Radii {
                rho,
                rho0: s.number("rho0")?,
                delta: s.number("delta")?,
                k0: match s.integer("k0")? {
                    Some(0) => return Err(err(&name, None, "k0 is one-based")),
                    Some(k) => Some(k - 1),
                    None => None,
                },
            };
            s.finish()?;
            r.validate(m).map_err(|e| err(&name, Some(line), e.to_string()))?;
            Some(r)
        }
        None => None,
    };

    let mut solve = SolveConfig::default();
    let mut threads = 1;
    if let Some(mut s) = take("solve") {
        let name = s.name.clone();
        if let Some(v) = s.number("tol")? {
            solve.tol = v;
        }
        if let Some(v) = s.integer("max_iter")? {
            solve.max_iter = v;
        }
        if let Some(v) = s.number("damping")? {
            if !(v > 0.0 && v <= 1.0) {
                return Err(err(&name, None, "damping must lie in (0, 1]"));
            }
            solve.damping = v;
        }
        if let Some(v) = s.number("divergence")? {
            solve.divergence = v;
        }
        if let Some(e) = s.take("start") {
            solve.start = parse_start(&e.value).map_err(|x| err(&name, Some(e.line), x))?;
        }
        if let Some(v) = s.integer("threads")? {
            threads = v.max(1);
        }
        s.finish()?;
    }

    let scan = match take("scan") {
        Some(mut s) => {
            let name = s.name.clone();
            let k = s.integer("k")?.unwrap_or(1);
            if k == 0 || k > m {
                return Err(err(&name, None, format!("k = {k} outside 1..={m}")));
            }
            let mut range = |key: &str| -> Result<Range, ConfigError> {
                let (v, line) = s.numbers(key)?.ok_or_else(|| err(&name, None, format!("missing key '{key}'")))?;
                if v.len() != 3 || v[2] < 0.0 || v[2].fract() != 0.0 {
                    return Err(err(&name, Some(line), format!("{key}: expected 'lo, hi, count'")));
                }
                Ok(Range { lo: v[0], hi: v[1], n: v[2] as usize })
            };
            let lambda = range("lambda")?;
            let eta = range("eta")?;
            s.finish()?;
            Some(ScanGrid { k: k - 1, lambda, eta })
        }
        None => None,
    };

    let mut constants = ConstantsConfig::default();
    if let Some(mut s) = take("constants") {
        if let Some(v) = s.integer("samples")? {
            constants.samples = v;
        }
        if let Some(v) = s.integer("full_sweep_limit")? {
            constants.full_sweep_limit = v;
        }
        if let Some(v) = s.number("eigen_tol")? {
            constants.eigen_tol = v;
        }
        if let Some(v) = s.integer("eigen_max_iter")? {
            constants.eigen_max_iter = v;
        }
        if let Some(v) = s.integer("sources")? {
            constants.sources = v;
        }
        if let Some(v) = s.number("exclusion")? {
            constants.exclusion = v;
        }
        if let Some(v) = s.integer("seed")? {
            constants.seed = v as u64;
        }
        s.finish()?;
    }

    if let Some(s) = sections.first() {
        return Err(err(&s.name, Some(s.line), "unknown section"));
    }
    Ok(RunConfig {
        precision,
        domain,
        equations,
        radii,
        solve,
        scan,
        threads,
        constants,
    })
}

fn parse_domain(sec: Option<Section>) -> Result<(DomainConfig, Precision), ConfigError> {
    let Some(mut s) = sec else {
        return Err(err("domain", None, "missing section"));
    };
    let name = s.name.clone();
    let kind = match s.take("kind") {
        None => DomainKind::Ball,
        Some(e) => match e.value.as_str() {
            "ball" => DomainKind::Ball,
            "box" => DomainKind::Box,
            "interval" => DomainKind::Interval,
            other => return Err(err(&name, Some(e.line), format!("kind: expected ball, box or interval, found '{other}'"))),
        },
    };
    let dim = s.integer("dim")?.unwrap_or(if kind == DomainKind::Interval { 1 } else { 3 });
    if !(1..=3).contains(&dim) {
        return Err(err(&name, None, format!("dim = {dim} outside 1..=3")));
    }
    if kind == DomainKind::Interval && dim != 1 {
        return Err(err(&name, None, "interval domains have dim = 1"));
    }
    let vector = |s: &mut Section, key: &str, default: f64| -> Result<Vec<f64>, ConfigError> {
        match s.numbers(key)? {
            None => Ok(vec![default; dim]),
            Some((v, _)) if v.len() == 1 => Ok(vec![v[0]; dim]),
            Some((v, line)) if v.len() == dim => {
                let _ = line;
                Ok(v)
            }
            Some((v, line)) => Err(err(&name, Some(line), format!("{key} has {} entries, dim = {dim}", v.len()))),
        }
    };
    let center = vector(&mut s, "center", 0.0)?;
    let lower = vector(&mut s, "lower", 0.0)?;
    let upper = vector(&mut s, "upper", 1.0)?;
    let radius = s.number("radius")?.unwrap_or(1.0);
    let h = s.number("h")?.unwrap_or(1.0 / 16.0);
    let precision = match s.take("precision") {
        None => Precision::F64,
        Some(e) => match e.value.as_str() {
            "f64" => Precision::F64,
            "f32" => Precision::F32,
            other => return Err(err(&name, Some(e.line), format!("precision: expected f32 or f64, found '{other}'"))),
        },
    };
    s.finish()?;
    let d = DomainConfig {
        kind,
        dim,
        center,
        radius,
        lower,
        upper,
        h,
    };
    d.spec::<f64>().validate().map_err(|e| err(&name, None, e.to_string()))?;
    Ok((d, precision))
}

fn parse_operator(mut s: Section, n: usize) -> Result<OperatorConfig, ConfigError> {
    let name = s.name.clone();
    let x_only = Dims { n, m: 0 };
    let mut op = OperatorConfig::laplacian(n);
    let a = s.exprs("a", x_only, n * n)?;
    let diag = s.exprs("diag", x_only, n)?;
    match (a, diag) {
        (Some(_), Some(_)) => return Err(err(&name, None, "give either 'a' or 'diag', not both")),
        (Some(a), None) => op.a = a,
        (None, Some(d)) => {
            for (l, e) in d.into_iter().enumerate() {
                op.a[l * n + l] = e;
            }
        }
        (None, None) => {}
    }
    if let Some(b) = s.exprs("b", x_only, n)? {
        op.b = b;
    }
    if let Some(c) = s.exprs("c", x_only, n)? {
        op.c = c;
    }
    if let Some(d) = s.expr("d", x_only)? {
        op.d = d;
    }
    s.finish()?;
    Ok(op)
}

pub fn parse_start(v: &str) -> Result<Start, String> {
    let v = v.trim();
    match v {
        "zero" => return Ok(Start::Zero),
        "eigen" => return Ok(Start::Eigen),
        _ => {}
    }
    if let Some(c) = v.strip_prefix("constant:") {
        return parse_constant(c).map(Start::Constant).map_err(|e| format!("start: {e}"));
    }
    if let Some(s) = v.strip_prefix("random:") {
        return s.trim().parse().map(Start::Random).map_err(|_| format!("start: bad seed '{s}'"));
    }
    Err(format!("start: expected zero, eigen, constant:<v> or random:<seed>, found '{v}'"))
}

fn start_text(s: &Start) -> String {
    match s {
        Start::Zero => "zero".into(),
        Start::Eigen => "eigen".into(),
        Start::Constant(v) => format!("constant:{v:?}"),
        Start::Random(seed) => format!("random:{seed}"),
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn expr_list(v: &[Expr]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

/// Canonical text form; parses back to an equal configuration.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let d = &self.domain;
        writeln!(s, "[domain]").ok();
        writeln!(s, "kind = {}", d.kind.name()).ok();
        writeln!(s, "dim = {}", d.dim).ok();
        writeln!(s, "center = \"{}\"", list(&d.center)).ok();
        writeln!(s, "radius = {:?}", d.radius).ok();
        writeln!(s, "lower = \"{}\"", list(&d.lower)).ok();
        writeln!(s, "upper = \"{}\"", list(&d.upper)).ok();
        writeln!(s, "h = {:?}", d.h).ok();
        writeln!(s, "precision = {}", if self.precision == Precision::F32 { "f32" } else { "f64" }).ok();
        let n = d.dim;
        for (i, e) in self.equations.iter().enumerate() {
            let k = i + 1;
            let rows: Vec<String> = e.operator.a.chunks(n).map(expr_list).collect();
            writeln!(s, "\n[operator.{k}]").ok();
            writeln!(s, "a = \"{}\"", rows.join("; ")).ok();
            writeln!(s, "b = \"{}\"", expr_list(&e.operator.b)).ok();
            writeln!(s, "c = \"{}\"", expr_list(&e.operator.c)).ok();
            writeln!(s, "d = \"{}\"", e.operator.d).ok();
            writeln!(s, "\n[equation.{k}]").ok();
            writeln!(s, "f = \"{}\"", e.f).ok();
            writeln!(s, "lambda = {:?}", e.lambda).ok();
            writeln!(s, "\n[bc.{k}]").ok();
            writeln!(s, "h = \"{}\"", e.h).ok();
            writeln!(s, "zeta = \"{}\"", e.zeta).ok();
            writeln!(s, "eta = {:?}", e.eta).ok();
        }
        if let Some(r) = &self.radii {
            writeln!(s, "\n[radii]").ok();
            writeln!(s, "rho = \"{}\"", list(&r.rho)).ok();
            if let Some(v) = r.rho0 {
                writeln!(s, "rho0 = {v:?}").ok();
            }
            if let Some(v) = r.delta {
                writeln!(s, "delta = {v:?}").ok();
            }
            if let Some(k) = r.k0 {
                writeln!(s, "k0 = {}", k + 1).ok();
            }
        }
        let sv = &self.solve;
        writeln!(s, "\n[solve]").ok();
        writeln!(s, "tol = {:?}", sv.tol).ok();
        writeln!(s, "max_iter = {}", sv.max_iter).ok();
        writeln!(s, "damping = {:?}", sv.damping).ok();
        writeln!(s, "divergence = {:?}", sv.divergence).ok();
        writeln!(s, "start = \"{}\"", start_text(&sv.start)).ok();
        writeln!(s, "threads = {}", self.threads).ok();
        if let Some(g) = &self.scan {
            writeln!(s, "\n[scan]").ok();
            writeln!(s, "k = {}", g.k + 1).ok();
            writeln!(s, "lambda = \"{:?}, {:?}, {}\"", g.lambda.lo, g.lambda.hi, g.lambda.n).ok();
            writeln!(s, "eta = \"{:?}, {:?}, {}\"", g.eta.lo, g.eta.hi, g.eta.n).ok();
        }
        let c = &self.constants;
        writeln!(s, "\n[constants]").ok();
        writeln!(s, "samples = {}", c.samples).ok();
        writeln!(s, "full_sweep_limit = {}", c.full_sweep_limit).ok();
        writeln!(s, "eigen_tol = {:?}", c.eigen_tol).ok();
        writeln!(s, "eigen_max_iter = {}", c.eigen_max_iter).ok();
        writeln!(s, "sources = {}", c.sources).ok();
        writeln!(s, "exclusion = {:?}", c.exclusion).ok();
        writeln!(s, "seed = {}", c.seed).ok();
        f.write_str(&s)
    }
}
