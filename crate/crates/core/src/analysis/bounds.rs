//! The scalar constants of the existence and non-existence tests:
//! `M_k`, `H_k`, `tau_k`, `xi_k`, and the lower-growth check behind `rho_0`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::search::{certify_lower, derivative_bounds, expr_max, maximize, minimize, Geometry, LowerCert, Region, SearchOptions, Slot};
use super::AnalysisError;
use crate::expr::{eval_expr, eval_functional, interval_bound, Arith, BinOp, EvalError, Expr, FieldSet, FunctionalExpr, Interval, KernelKind, VarBox};
use crate::mesh::{DiscreteDomain, ScalarField};
use crate::scalar::Real;

/// Slack for outward rounding in sign checks (`e >= -NONNEG_TOL`).
pub const NONNEG_TOL: f64 = 1e-9;
/// Values below this at `z_k = 0` count as vanishing.
pub const ZERO_TOL: f64 = 1e-12;
/// Box budget for branch and bound.
pub const MAX_BOXES: usize = 4096;

/// Sampled maximum with its interval certificate.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MaxBound {
    /// Sampled maximum (attained at `argmax`).
    pub value: f64,
    /// Interval upper bound over the whole box.
    pub upper: f64,
    /// `upper - value`.
    pub gap: f64,
    pub argmax_x: Vec<f64>,
    pub argmax_z: Vec<f64>,
    pub argmax_w: Vec<f64>,
    pub evaluations: usize,
}

/// `M = max f` over `closure(O) x I(rho) x R(rho)`.
pub fn compute_mk(f: &Expr, rho: &[f64], geom: &Geometry, opts: &SearchOptions) -> Result<MaxBound, AnalysisError> {
    let region = Region::cone(geom, rho);
    let (ext, upper) = expr_max(f, &region, opts).map_err(AnalysisError::NotAdmissible)?;
    Ok(MaxBound {
        value: ext.value,
        upper,
        gap: upper - ext.value,
        argmax_x: ext.x,
        argmax_z: ext.z,
        argmax_w: ext.w,
        evaluations: ext.evaluations,
    })
}

/// Certified lower bound of `e` over the cone box, aiming at `>= -NONNEG_TOL`.
pub fn nonneg_certificate(e: &Expr, rho: &[f64], geom: &Geometry) -> LowerCert {
    let region = Region::cone(geom, rho);
    certify_lower(e, &region.var_box(), geom, -NONNEG_TOL, MAX_BOXES)
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    /// Certified through monotonicity of every term.
    Monotone,
    /// Extremes over a finite library of admissible fields; not a certificate.
    Heuristic,
}

/// Supremum and infimum of a functional over the cone.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FunctionalBound {
    pub value: f64,
    pub lower: f64,
    pub mode: BoundMode,
}

fn kernel_measure(kind: &KernelKind, geom: &Geometry) -> f64 {
    match kind {
        KernelKind::IntDom => geom.measure,
        KernelKind::IntBnd => geom.boundary_measure,
        KernelKind::PointVal(_) | KernelKind::MaxBnd => 1.0,
    }
}

/// Kernel applied to constant `(z, w)`: nodewise when `e` depends on `x`,
/// exact measure otherwise.
fn kernel_at<T: Real>(e: &Expr, kind: &KernelKind, z: &[f64], w: &[f64], dom: &DiscreteDomain<T>, geom: &Geometry) -> Result<f64, EvalError> {
    let uses_x = !e.vars(geom.n).x.is_empty();
    if let KernelKind::PointVal(p) = kind {
        return eval_expr(e, p, z, w);
    }
    if !uses_x {
        return Ok(eval_expr(e, &geom.x_ref, z, w)? * kernel_measure(kind, geom));
    }
    let n_int = dom.n_interior();
    let at = |node: usize| {
        let x: Vec<f64> = dom.coord(node).iter().map(|v| v.as_f64()).collect();
        eval_expr(e, &x, z, w)
    };
    Ok(match kind {
        KernelKind::IntDom => {
            let mut s = 0.0;
            for (node, wt) in dom.volume_weights().iter().enumerate() {
                s += wt.as_f64() * at(node)?;
            }
            s
        }
        KernelKind::IntBnd => {
            let mut s = 0.0;
            for (b, wt) in dom.surface_weights().iter().enumerate() {
                s += wt.as_f64() * at(n_int + b)?;
            }
            s
        }
        KernelKind::MaxBnd => {
            let mut s = f64::NEG_INFINITY;
            for node in n_int..dom.n_nodes() {
                s = s.max(at(node)?);
            }
            s
        }
        KernelKind::PointVal(_) => unreachable!(),
    })
}

/// Sup and inf of one kernel over fields with values in `zr` and gradient
/// components in `[-wr_j, wr_j]`, or `None` when some variable is not
/// monotone on some orthant.
fn kernel_extrema<T: Real>(
    e: &Expr,
    kind: &KernelKind,
    zr: &[Interval<f64>],
    wr: &[f64],
    dom: &DiscreteDomain<T>,
    geom: &Geometry,
) -> Result<Option<(f64, f64)>, EvalError> {
    let n = geom.n;
    let m = zr.len();
    let used = e.vars(n);
    if used.w.len() > 12 {
        return Ok(None);
    }
    let x = match kind {
        KernelKind::PointVal(p) => p.iter().map(|&v| Interval::point(v)).collect(),
        _ => geom.x_box(),
    };
    let sl: Vec<Slot> = used
        .z
        .iter()
        .map(|&j| Slot::Z(j))
        .chain(used.w.iter().map(|&(j, l)| Slot::W(j * n + l)))
        .collect();
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for mask in 0..(1usize << used.w.len()) {
        let mut w = vec![Interval::point(0.0); m * n];
        for (bit, &(j, l)) in used.w.iter().enumerate() {
            w[j * n + l] = if mask >> bit & 1 == 1 { Interval::new(0.0, wr[j]) } else { Interval::new(-wr[j], 0.0) };
        }
        let bx = VarBox { x: x.clone(), z: zr.to_vec(), w, n };
        let (_, ds) = derivative_bounds(e, &bx, &sl)?;
        let mut zmax: Vec<f64> = zr.iter().map(|i| i.lo).collect();
        let mut zmin = zmax.clone();
        let mut wmax = vec![0.0; m * n];
        let mut wmin = vec![0.0; m * n];
        for (s, d) in sl.iter().zip(&ds) {
            let iv = crate::analysis::search::slot_iv(&bx, *s);
            let inc = d.lo >= -ZERO_TOL;
            let dec = d.hi <= ZERO_TOL;
            let (hi_at, lo_at) = match (inc, dec) {
                (true, _) => (iv.hi, iv.lo),
                (false, true) => (iv.lo, iv.hi),
                (false, false) => return Ok(None),
            };
            match *s {
                Slot::Z(j) => {
                    zmax[j] = hi_at;
                    zmin[j] = lo_at;
                }
                Slot::W(k) => {
                    wmax[k] = hi_at;
                    wmin[k] = lo_at;
                }
                Slot::X(_) => {}
            }
        }
        sup = sup.max(kernel_at(e, kind, &zmax, &wmax, dom, geom)?);
        inf = inf.min(kernel_at(e, kind, &zmin, &wmin, dom, geom)?);
    }
    Ok(Some((sup, inf)))
}

/// Monotone-mode extremes of `h`; `None` if any term is not monotone.
pub fn functional_extrema<T: Real>(
    h: &FunctionalExpr,
    zr: &[Interval<f64>],
    wr: &[f64],
    dom: &DiscreteDomain<T>,
    geom: &Geometry,
) -> Result<Option<(f64, f64)>, EvalError> {
    let mut hi = h.constant;
    let mut lo = h.constant;
    for t in &h.terms {
        let Some((s, i)) = kernel_extrema(&t.kernel.expr, &t.kernel.kind, zr, wr, dom, geom)? else {
            return Ok(None);
        };
        if t.coeff >= 0.0 {
            hi += t.coeff * s;
            lo += t.coeff * i;
        } else {
            hi += t.coeff * i;
            lo += t.coeff * s;
        }
    }
    Ok(Some((hi, lo)))
}

/// Admissible test fields for one component of radius `r`: constants,
/// affine ramps and a centred bump, all with values in `[0, r]` and gradient
/// components bounded by `r`.
fn field_library<T: Real>(dom: &DiscreteDomain<T>, geom: &Geometry, r: f64) -> Vec<ScalarField<T>> {
    let n = geom.n;
    let mut out = vec![
        ScalarField::zeros(dom),
        ScalarField::constant(dom, T::lit(0.5 * r)),
        ScalarField::constant(dom, T::lit(r)),
    ];
    for l in 0..n {
        let half = 0.5 * (geom.x_hi[l] - geom.x_lo[l]);
        let c = geom.x_ref[l];
        let a = r.min(0.5 * r / half.max(1e-300));
        for s in [-1.0, 1.0] {
            out.push(dom.field_from_fn(|x| T::lit(0.5 * r + s * a * (x[l].as_f64() - c))));
        }
    }
    let big_r = (0..n).map(|l| 0.5 * (geom.x_hi[l] - geom.x_lo[l])).fold(0.0, f64::max);
    let amp = r.min(0.5 * r * big_r);
    out.push(dom.field_from_fn(|x| {
        let d2: f64 = (0..n).map(|l| (x[l].as_f64() - geom.x_ref[l]).powi(2)).sum();
        T::lit(amp * (1.0 - d2 / (big_r * big_r)).max(0.0))
    }));
    out
}

/// Max and min of `h` over products of library fields.
fn heuristic_extrema<T: Real>(h: &FunctionalExpr, rho: &[f64], dom: &DiscreteDomain<T>, geom: &Geometry) -> Result<(f64, f64), AnalysisError> {
    let m = rho.len();
    let mut libs: Vec<Vec<ScalarField<T>>> = rho.iter().map(|&r| field_library(dom, geom, r)).collect();
    let combos = libs.iter().map(|l| l.len()).product::<usize>();
    if combos > 1000 {
        libs.iter_mut().for_each(|l| l.truncate(3));
    }
    let sizes: Vec<usize> = libs.iter().map(|l| l.len()).collect();
    let mut idx = vec![0usize; m];
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    loop {
        let fields: Vec<ScalarField<T>> = (0..m).map(|j| libs[j][idx[j]].clone()).collect();
        let fs = FieldSet::new(dom, &fields);
        let v = eval_functional(h, dom, &fs).map_err(AnalysisError::Functional)?.as_f64();
        hi = hi.max(v);
        lo = lo.min(v);
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }
    Ok((hi, lo))
}

/// `H = sup h` over the cone `P(rho)`.
pub fn compute_hk<T: Real>(h: &FunctionalExpr, rho: &[f64], dom: &DiscreteDomain<T>, geom: &Geometry) -> Result<FunctionalBound, AnalysisError> {
    let zr: Vec<Interval<f64>> = rho.iter().map(|&r| Interval::new(0.0, r)).collect();
    match functional_extrema(h, &zr, rho, dom, geom).map_err(AnalysisError::NotAdmissible)? {
        Some((value, lower)) => Ok(FunctionalBound {
            value,
            lower,
            mode: BoundMode::Monotone,
        }),
        None => {
            let (value, lower) = heuristic_extrema(h, rho, dom, geom)?;
            Ok(FunctionalBound {
                value,
                lower,
                mode: BoundMode::Heuristic,
            })
        }
    }
}

/// A linear growth constant: sampled estimate and certified value.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RatioBound {
    /// Largest ratio seen on samples (a lower estimate of the best constant).
    pub sampled: f64,
    /// A valid constant (`inf` when none could be certified).
    pub certified: f64,
    pub note: Option<String>,
}

impl RatioBound {
    fn uncertified(sampled: f64, note: &str) -> Self {
        RatioBound {
            sampled,
            certified: f64::INFINITY,
            note: Some(note.into()),
        }
    }
}

struct Piece {
    bound: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

/// Smallest `tau` with `f <= tau z_k` on the cone box.
///
/// The certified value splits `z_k` into geometric pieces, refined where
/// needed; each piece is bounded by the smallest of the quotient enclosure,
/// a mean-value bound and, since `f` vanishes at `z_k = 0`, the sup of
/// `df/dz_k` on `[0, b]`.
pub fn compute_tau(f: &Expr, k: usize, rho: &[f64], geom: &Geometry, opts: &SearchOptions) -> Result<RatioBound, AnalysisError> {
    let rk = rho[k];
    let eps = rk * 1e-6;
    let mut region = Region::cone(geom, rho);
    region.z[k] = Interval::new(eps, rk);
    let mut used = f.vars(geom.n);
    if !used.z.contains(&k) {
        used.z.push(k);
        used.z.sort_unstable();
    }
    let ratio = |x: &[f64], z: &[f64], w: &[f64]| Ok(eval_expr(f, x, z, w)? / z[k]);
    let sampled = maximize(&ratio, &used, &region, opts).map_err(AnalysisError::NotAdmissible)?.value;

    let base = Region::cone(geom, rho).var_box();
    let mut at_zero = base.clone();
    at_zero.z[k] = Interval::point(0.0);
    let f0 = match interval_bound(f, &at_zero) {
        Ok(iv) => iv.hi,
        Err(_) => f64::INFINITY,
    };
    if f0 > ZERO_TOL {
        return Ok(RatioBound::uncertified(sampled, "f_k does not vanish at z_k = 0; the ratio is unbounded"));
    }
    let slot = [Slot::Z(k)];
    let slope = |b: f64| -> f64 {
        let mut bx = base.clone();
        bx.z[k] = Interval::new(0.0, b);
        derivative_bounds(f, &bx, &slot).map(|(_, d)| d[0].hi).unwrap_or(f64::INFINITY)
    };
    let pieces = 2000;
    let lo_frac: f64 = 1e-9;
    let brk = |i: usize| rk * lo_frac.powf((pieces - i) as f64 / pieces as f64);
    let q = Expr::bin(BinOp::Div, f.clone(), Expr::Z(k));
    // Mean-value bound of `f / z_k` on `[a, b]` expanded about `b`.
    let mean_value = |a: f64, b: f64| -> f64 {
        let mut bx = base.clone();
        bx.z[k] = Interval::new(a, b);
        let Ok((_, d)) = derivative_bounds(&q, &bx, &slot) else {
            return f64::INFINITY;
        };
        bx.z[k] = Interval::point(b);
        match interval_bound(&q, &bx) {
            Ok(v) => v.hi + (b - a) * (-d[0].lo).max(0.0),
            Err(_) => f64::INFINITY,
        }
    };
    let piece = |a: f64, b: f64| -> f64 {
        let mut bx = base.clone();
        bx.z[k] = Interval::new(a, b);
        let naive = interval_bound(f, &bx)
            .ok()
            .and_then(|iv| iv.div(&Interval::new(a, b)).ok())
            .map(|iv| iv.hi)
            .unwrap_or(f64::INFINITY);
        naive.min(mean_value(a, b)).min(slope(b))
    };
    // Pieces whose bound exceeds the sampled maximum are bisected
    // geometrically until the bound is tight or the budget runs out.
    let target = sampled.max(0.0) * (1.0 + 1e-4) + ZERO_TOL;
    let mut heap: BinaryHeap<Piece> = (1..=pieces)
        .map(|i| {
            let (a, b) = (brk(i - 1), if i == pieces { rk } else { brk(i) });
            Piece { bound: piece(a, b), a, b }
        })
        .collect();
    let mut splits = 0;
    while let Some(top) = heap.peek() {
        if top.bound <= target || splits >= 20_000 || !top.bound.is_finite() {
            break;
        }
        let Piece { a, b, .. } = heap.pop().unwrap();
        let mid = (a * b).sqrt();
        heap.push(Piece { bound: piece(a, mid), a, b: mid });
        heap.push(Piece { bound: piece(mid, b), a: mid, b });
        splits += 1;
    }
    let cert = heap.peek().map_or(0.0, |p| p.bound).max(slope(brk(0)));
    let cert = cert.max(0.0);
    Ok(RatioBound {
        sampled,
        certified: cert,
        note: None,
    })
}

/// Smallest `xi` with `h[u] <= xi ||u||_inf` on `P(rho)` (monotone mode).
///
/// `H(s)` is the monotone sup over fields with values in `[0, min(s, rho_j)]`;
/// since it is non-decreasing, `H(s_{i+1}) / s_i` bounds the ratio on each
/// grid cell. Near zero a first-order bound is used.
pub fn compute_xi<T: Real>(h: &FunctionalExpr, rho: &[f64], dom: &DiscreteDomain<T>, geom: &Geometry) -> Result<RatioBound, AnalysisError> {
    let n = geom.n;
    let used = h.vars(n);
    if used.uses_gradient() {
        return Ok(RatioBound::uncertified(f64::NAN, "not certifiable under (b): h depends on gradients"));
    }
    if h.constant > ZERO_TOL {
        return Ok(RatioBound::uncertified(f64::INFINITY, "h has a positive constant term; the ratio is unbounded"));
    }
    let smax = rho.iter().copied().fold(0.0, f64::max);
    let uses_x = h.terms.iter().any(|t| !t.kernel.expr.vars(n).x.is_empty() && !matches!(t.kernel.kind, KernelKind::PointVal(_)));
    let cells = if uses_x { 100 } else { 5000 };
    let s_min = smax * 1e-6;
    let s_at = |i: usize| s_min * (smax / s_min).powf(i as f64 / cells as f64);
    let zeros = vec![0.0; rho.len()];
    let mut hs = Vec::with_capacity(cells + 1);
    for i in 0..=cells {
        let s = if i == cells { smax } else { s_at(i) };
        let zr: Vec<Interval<f64>> = rho.iter().map(|&r| Interval::new(0.0, r.min(s))).collect();
        match functional_extrema(h, &zr, &zeros, dom, geom).map_err(AnalysisError::NotAdmissible)? {
            Some((hi, _)) => hs.push((s, hi)),
            None => return Ok(RatioBound::uncertified(f64::NAN, "h is not monotone on the cone; no certified constant")),
        }
    }
    let sampled = hs.iter().map(|&(s, v)| v / s).fold(f64::NEG_INFINITY, f64::max);
    let mut cert = hs.windows(2).map(|p| p[1].1 / p[0].0).fold(f64::NEG_INFINITY, f64::max);

    // Near zero: h(u) <= s * sum of slope bounds, provided every kernel
    // vanishes at u = 0.
    let mut near = 0.0;
    for t in &h.terms {
        let e = &t.kernel.expr;
        let x = match &t.kernel.kind {
            KernelKind::PointVal(p) => p.iter().map(|&v| Interval::point(v)).collect(),
            _ => geom.x_box(),
        };
        let meas = kernel_measure(&t.kernel.kind, geom);
        let vars = e.vars(n);
        let zero_box = VarBox {
            x: x.clone(),
            z: vec![Interval::point(0.0); rho.len()],
            w: vec![Interval::point(0.0); rho.len() * n],
            n,
        };
        let e0 = interval_bound(e, &zero_box).map_err(AnalysisError::NotAdmissible)?;
        let c0 = if t.coeff >= 0.0 { t.coeff * e0.hi } else { t.coeff * e0.lo };
        if c0 * meas > ZERO_TOL {
            return Ok(RatioBound::uncertified(sampled, "h does not vanish at u = 0; the ratio is unbounded"));
        }
        let sl: Vec<Slot> = vars.z.iter().map(|&j| Slot::Z(j)).collect();
        let bx = VarBox {
            x,
            z: vec![Interval::new(0.0, s_min); rho.len()],
            w: vec![Interval::point(0.0); rho.len() * n],
            n,
        };
        let (_, ds) = derivative_bounds(e, &bx, &sl).map_err(AnalysisError::NotAdmissible)?;
        let slo: f64 = ds.iter().map(|d| d.lo.min(0.0)).sum();
        let shi: f64 = ds.iter().map(|d| d.hi.max(0.0)).sum();
        near += meas * if t.coeff >= 0.0 { t.coeff * shi } else { t.coeff * slo };
    }
    cert = cert.max(near).max(0.0);
    Ok(RatioBound {
        sampled,
        certified: cert,
        note: None,
    })
}

/// Outcome of the check `f_k0 >= delta z_k0` on `closure(O) x I_0 x R_0`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LowerBoundCheck {
    pub pass: bool,
    /// Certified lower bound of `f_k0 - delta z_k0`.
    pub lower: f64,
    /// Sampled minimum of `f_k0 - delta z_k0`.
    pub sampled_min: f64,
    pub boxes: usize,
    /// Rounding slack allowed below zero, relative to `delta rho_0`.
    pub tol: f64,
}

/// Slack of the growth check; relative so that a vanishing `rho_0` cannot
/// pass on rounding slack alone.
pub fn growth_tol(delta: f64, rho0: f64) -> f64 {
    NONNEG_TOL * (delta.abs() * rho0).min(1.0)
}

fn growth_gap(f: &Expr, k0: usize, delta: f64) -> Expr {
    Expr::bin(BinOp::Sub, f.clone(), Expr::bin(BinOp::Mul, Expr::num(delta), Expr::Z(k0)))
}

/// Interval part of [`check_lower_bound`].
pub fn certify_growth(f: &Expr, k0: usize, delta: f64, rho0: f64, m: usize, geom: &Geometry) -> LowerCert {
    let g = growth_gap(f, k0, delta);
    let region = Region::cone(geom, &vec![rho0; m]);
    certify_lower(&g, &region.var_box(), geom, -growth_tol(delta, rho0), MAX_BOXES)
}

/// Checks `f_k0 >= delta z_k0` by sampling and by interval arithmetic.
pub fn check_lower_bound(f: &Expr, k0: usize, delta: f64, rho0: f64, m: usize, geom: &Geometry, opts: &SearchOptions) -> Result<LowerBoundCheck, AnalysisError> {
    let g = growth_gap(f, k0, delta);
    let region = Region::cone(geom, &vec![rho0; m]);
    let obj = |x: &[f64], z: &[f64], w: &[f64]| eval_expr(&g, x, z, w);
    let sampled_min = minimize(&obj, &g.vars(geom.n), &region, opts).map_err(AnalysisError::NotAdmissible)?.value;
    let tol = growth_tol(delta, rho0);
    let cert = certify_lower(&g, &region.var_box(), geom, -tol, MAX_BOXES);
    Ok(LowerBoundCheck {
        pass: cert.holds(-tol) && sampled_min >= -tol,
        lower: cert.lower,
        sampled_min,
        boxes: cert.boxes,
        tol,
    })
}

/// Largest `rho_0 < cap` for which the interval check of `f_k0 >= delta z_k0`
/// passes, by bisection; zero when none does.
pub fn find_rho0(f: &Expr, k0: usize, delta: f64, m: usize, cap: f64, geom: &Geometry) -> f64 {
    let ok = |r: f64| certify_growth(f, k0, delta, r, m, geom).holds(-growth_tol(delta, r));
    let top = cap * (1.0 - 1e-9);
    if ok(top) {
        return top;
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * top {
            break;
        }
    }
    lo
}
