//! Sampled extrema and branch-and-bound interval bounds over
//! `closure(O) x box(z) x box(w)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{DiscreteDomain, DomainKind};
use crate::scalar::Real;
use crate::expr::{eval_expr, eval_generic, Arith, EvalError, Expr, IDual, Interval, VarBox, VarUse};

/// Domain geometry in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub n: usize,
    pub kind: DomainKind,
    pub center: Vec<f64>,
    pub radius: f64,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    /// A point of the domain used when `x` is inactive.
    pub x_ref: Vec<f64>,
    /// Exact `|O|`.
    pub measure: f64,
    /// Exact `|dO|`.
    pub boundary_measure: f64,
}

impl Geometry {
    pub fn of<T: Real>(dom: &DiscreteDomain<T>) -> Self {
        let spec = dom.spec();
        let (lo, hi) = dom.bounding_box();
        let x_lo: Vec<f64> = lo.iter().map(|v| v.as_f64()).collect();
        let x_hi: Vec<f64> = hi.iter().map(|v| v.as_f64()).collect();
        Geometry {
            n: dom.dim(),
            kind: spec.kind,
            center: spec.center.iter().map(|v| v.as_f64()).collect(),
            radius: spec.radius.as_f64(),
            x_ref: x_lo.iter().zip(&x_hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            x_lo,
            x_hi,
            measure: dom.measure().as_f64(),
            boundary_measure: dom.boundary_measure().as_f64(),
        }
    }

    /// Membership in the closed domain, with a relative slack of `1e-12`.
    pub fn inside(&self, p: &[f64]) -> bool {
        let tol = 1e-12 * (1.0 + self.radius.abs());
        match self.kind {
            DomainKind::Ball => p.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() <= self.radius + tol,
            _ => p.iter().zip(self.x_lo.iter().zip(&self.x_hi)).all(|(&x, (&a, &b))| x >= a - tol && x <= b + tol),
        }
    }

    pub fn x_box(&self) -> Vec<Interval<f64>> {
        self.x_lo.iter().zip(&self.x_hi).map(|(&a, &b)| Interval::new(a, b)).collect()
    }
}

/// Search region: `x` in the closed domain, `z` one interval per field,
/// `w` row-major `m x n`.
pub struct Region<'a> {
    pub geom: &'a Geometry,
    pub z: Vec<Interval<f64>>,
    pub w: Vec<Interval<f64>>,
}

impl<'a> Region<'a> {
    /// `z_j in [0, rho_j]`, `w[j][l] in [-rho_j, rho_j]`.
    pub fn cone(geom: &'a Geometry, rho: &[f64]) -> Self {
        Region {
            geom,
            z: rho.iter().map(|&r| Interval::new(0.0, r)).collect(),
            w: rho.iter().flat_map(|&r| std::iter::repeat_n(Interval::new(-r, r), geom.n)).collect(),
        }
    }

    /// Interval box covering the region.
    pub fn var_box(&self) -> VarBox<f64> {
        VarBox {
            x: self.geom.x_box(),
            z: self.z.clone(),
            w: self.w.clone(),
            n: self.geom.n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Axis {
    X(usize),
    Z(usize),
    W(usize),
}

fn axes(used: &VarUse, n: usize) -> Vec<Axis> {
    let mut out = Vec::new();
    if !used.x.is_empty() {
        out.extend((0..n).map(Axis::X));
    }
    out.extend(used.z.iter().map(|&j| Axis::Z(j)));
    out.extend(used.w.iter().map(|&(j, l)| Axis::W(j * n + l)));
    out
}

fn range(r: &Region, a: Axis) -> (f64, f64) {
    match a {
        Axis::X(l) => (r.geom.x_lo[l], r.geom.x_hi[l]),
        Axis::Z(j) => (r.z[j].lo, r.z[j].hi),
        Axis::W(k) => (r.w[k].lo, r.w[k].hi),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Points per scalar dimension on the full grid.
    pub grid: usize,
    /// Above this many active dimensions Latin-hypercube sampling is used.
    pub max_grid_dims: usize,
    /// Cap on full-grid size; larger grids also fall back to sampling.
    pub max_grid_points: usize,
    pub lhs_samples: usize,
    /// Best samples refined by coordinate ascent.
    pub starts: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid: 17,
            max_grid_dims: 6,
            max_grid_points: 2_000_000,
            lhs_samples: 20_000,
            starts: 8,
            rounds: 40,
            seed: 0x5eed,
        }
    }
}

/// Location and value of a sampled extremum.
#[derive(Clone, Debug, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub evaluations: usize,
}

pub type Objective<'a> = dyn Fn(&[f64], &[f64], &[f64]) -> Result<f64, EvalError> + 'a;

struct Evaluator<'a, 'b> {
    obj: &'a Objective<'b>,
    region: &'a Region<'a>,
    axes: Vec<Axis>,
    count: usize,
}

impl Evaluator<'_, '_> {
    /// `None` when the point leaves the domain.
    fn eval(&mut self, p: &[f64]) -> Result<Option<f64>, EvalError> {
        let (x, z, w) = self.split(p);
        if self.axes.iter().any(|a| matches!(a, Axis::X(_))) && !self.region.geom.inside(&x) {
            return Ok(None);
        }
        self.count += 1;
        (self.obj)(&x, &z, &w).map(Some)
    }

    fn split(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = self.region;
        let mut x = r.geom.x_ref.clone();
        let mut z: Vec<f64> = r.z.iter().map(|i| i.lo).collect();
        let mut w: Vec<f64> = r.w.iter().map(|i| i.lo.max(0.0).min(i.hi)).collect();
        for (a, &v) in self.axes.iter().zip(p) {
            match *a {
                Axis::X(l) => x[l] = v,
                Axis::Z(j) => z[j] = v,
                Axis::W(k) => w[k] = v,
            }
        }
        (x, z, w)
    }
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k <= 1 || lo == hi {
        return vec![lo];
    }
    (0..k)
        .map(|i| if i + 1 == k { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
        .collect()
}

/// Maximizes `obj` over the region, varying only the variables in `used`.
///
/// Full grid (or Latin hypercube) followed by coordinate ascent from the
/// best samples. Deterministic for a fixed seed.
pub fn maximize(obj: &Objective<'_>, used: &VarUse, region: &Region<'_>, opts: &SearchOptions) -> Result<Extremum, EvalError> {
    let axes = axes(used, region.geom.n);
    let d = axes.len();
    let mut ev = Evaluator {
        obj,
        region,
        axes: axes.clone(),
        count: 0,
    };
    let grids: Vec<Vec<f64>> = axes
        .iter()
        .map(|&a| {
            let (lo, hi) = range(region, a);
            linspace(lo, hi, opts.grid)
        })
        .collect();

    let mut samples: Vec<(f64, Vec<f64>)> = Vec::new();
    let grid_size = grids.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
    let use_grid = d <= opts.max_grid_dims && grid_size.is_some_and(|s| s <= opts.max_grid_points);
    let keep = opts.starts.max(1);
    let push = |samples: &mut Vec<(f64, Vec<f64>)>, v: f64, p: Vec<f64>| {
        samples.push((v, p));
        if samples.len() > 4 * keep {
            samples.sort_by(|a, b| b.0.total_cmp(&a.0));
            samples.truncate(keep);
        }
    };
    if use_grid {
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
            if let Some(v) = ev.eval(&p)? {
                push(&mut samples, v, p);
            }
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] < grids[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let ns = opts.lhs_samples.max(1);
        let perms: Vec<Vec<usize>> = (0..d)
            .map(|_| {
                let mut p: Vec<usize> = (0..ns).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        for i in 0..ns {
            let mut p: Vec<f64> = (0..d)
                .map(|k| {
                    let (lo, hi) = range(region, axes[k]);
                    lo + (hi - lo) * (perms[k][i] as f64 + rng.random::<f64>()) / ns as f64
                })
                .collect();
            let mut tries = 0;
            let mut val = ev.eval(&p)?;
            while val.is_none() && tries < 32 {
                for (k, a) in axes.iter().enumerate() {
                    if matches!(a, Axis::X(_)) {
                        let (lo, hi) = range(region, *a);
                        p[k] = lo + (hi - lo) * rng.random::<f64>();
                    }
                }
                val = ev.eval(&p)?;
                tries += 1;
            }
            if let Some(v) = val {
                push(&mut samples, v, p);
            }
        }
        // Corners and centre of the (z, w) box are cheap and often optimal.
        let nonx: Vec<usize> = (0..d).filter(|&k| !matches!(axes[k], Axis::X(_))).collect();
        if nonx.len() <= 12 {
            let centre: Vec<f64> = axes
                .iter()
                .map(|&a| match a {
                    Axis::X(l) => region.geom.x_ref[l],
                    _ => {
                        let (lo, hi) = range(region, a);
                        0.0f64.clamp(lo, hi)
                    }
                })
                .collect();
            for mask in 0..(1usize << nonx.len()) {
                let mut p = centre.clone();
                for (bit, &k) in nonx.iter().enumerate() {
                    let (lo, hi) = range(region, axes[k]);
                    p[k] = if mask >> bit & 1 == 1 { hi } else { lo };
                }
                if let Some(v) = ev.eval(&p)? {
                    push(&mut samples, v, p);
                }
            }
            if let Some(v) = ev.eval(&centre)? {
                push(&mut samples, v, centre);
            }
        }
    }
    if d == 0 {
        let v = ev.eval(&[])?.unwrap_or(f64::NEG_INFINITY);
        let (x, z, w) = ev.split(&[]);
        return Ok(Extremum {
            value: v,
            x,
            z,
            w,
            evaluations: ev.count,
        });
    }
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    samples.truncate(keep);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (v0, p0) in samples {
        let (v, p) = ascend(&mut ev, &grids, v0, p0, opts.rounds)?;
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, p));
        }
    }
    let (value, p) = best.unwrap_or((f64::NEG_INFINITY, vec![0.0; d]));
    let (x, z, w) = ev.split(&p);
    Ok(Extremum {
        value,
        x,
        z,
        w,
        evaluations: ev.count,
    })
}

fn ascend(ev: &mut Evaluator<'_, '_>, grids: &[Vec<f64>], mut v: f64, mut p: Vec<f64>, rounds: usize) -> Result<(f64, Vec<f64>), EvalError> {
    let d = p.len();
    let mut step: Vec<f64> = (0..d)
        .map(|k| {
            let (lo, hi) = range(ev.region, ev.axes[k]);
            (hi - lo) / (grids[k].len().max(2) - 1) as f64
        })
        .collect();
    for round in 0..rounds {
        let mut moved = false;
        for k in 0..d {
            let (lo, hi) = range(ev.region, ev.axes[k]);
            let mut cands: Vec<f64> = if round == 0 { grids[k].clone() } else { Vec::new() };
            for s in [-2.0, -1.0, 1.0, 2.0] {
                cands.push((p[k] + s * step[k]).clamp(lo, hi));
            }
            for c in cands {
                if c == p[k] {
                    continue;
                }
                let mut q = p.clone();
                q[k] = c;
                if let Some(val) = ev.eval(&q)? {
                    if val > v {
                        v = val;
                        p = q;
                        moved = true;
                    }
                }
            }
        }
        step.iter_mut().for_each(|s| *s *= 0.5);
        if !moved && step.iter().all(|&s| s < 1e-13) {
            break;
        }
    }
    Ok((v, p))
}

/// Minimizes by maximizing the negation.
pub fn minimize(obj: &Objective<'_>, used: &VarUse, region: &Region<'_>, opts: &SearchOptions) -> Result<Extremum, EvalError> {
    let neg = |x: &[f64], z: &[f64], w: &[f64]| obj(x, z, w).map(|v| -v);
    let mut e = maximize(&neg, used, region, opts)?;
    e.value = -e.value;
    Ok(e)
}

/// Maximum of an expression; the sampled value plus the interval upper bound.
pub fn expr_max(e: &Expr, region: &Region<'_>, opts: &SearchOptions) -> Result<(Extremum, f64), EvalError> {
    let used = e.vars(region.geom.n);
    let obj = |x: &[f64], z: &[f64], w: &[f64]| eval_expr(e, x, z, w);
    let ext = maximize(&obj, &used, region, opts)?;
    let upper = crate::expr::interval_bound(e, &region.var_box())?.hi;
    Ok((ext, upper))
}

/// Result of [`certify_lower`].
#[derive(Clone, Debug, PartialEq)]
pub struct LowerCert {
    /// Rigorous lower bound of the expression over the box (may be `-inf`).
    pub lower: f64,
    /// A sampled value below the target, when one was found.
    pub counterexample: Option<f64>,
    pub boxes: usize,
}

impl LowerCert {
    pub fn holds(&self, target: f64) -> bool {
        self.counterexample.is_none() && self.lower >= target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    X(usize),
    Z(usize),
    W(usize),
}

pub(crate) fn slots(e: &Expr, n: usize) -> Vec<Slot> {
    let u = e.vars(n);
    axes(&u, n)
        .into_iter()
        .map(|a| match a {
            Axis::X(l) => Slot::X(l),
            Axis::Z(j) => Slot::Z(j),
            Axis::W(k) => Slot::W(k),
        })
        .collect()
}

pub(crate) fn slot_iv(b: &VarBox<f64>, s: Slot) -> Interval<f64> {
    match s {
        Slot::X(l) => b.x[l],
        Slot::Z(j) => b.z[j],
        Slot::W(k) => b.w[k],
    }
}

pub(crate) fn slot_set(b: &mut VarBox<f64>, s: Slot, v: Interval<f64>) {
    match s {
        Slot::X(l) => b.x[l] = v,
        Slot::Z(j) => b.z[j] = v,
        Slot::W(k) => b.w[k] = v,
    }
}

/// Interval enclosures of the partial derivatives over `b`, one per slot.
pub(crate) fn derivative_bounds(e: &Expr, b: &VarBox<f64>, sl: &[Slot]) -> Result<(Interval<f64>, Vec<Interval<f64>>), EvalError> {
    let count = sl.len();
    let lift = |v: &[Interval<f64>], f: &dyn Fn(usize) -> Slot| -> Vec<IDual<f64>> {
        v.iter()
            .enumerate()
            .map(|(i, &iv)| match sl.iter().position(|&s| s == f(i)) {
                Some(k) => IDual::variable(iv, k, count),
                None => IDual::constant_interval(iv),
            })
            .collect()
    };
    let x = lift(&b.x, &Slot::X);
    let z = lift(&b.z, &Slot::Z);
    let w = lift(&b.w, &Slot::W);
    let r = eval_generic(e, &x, &z, &w, b.n)?;
    Ok((r.v, (0..count).map(|k| r.deriv(k)).collect()))
}

/// Lower bound from the naive enclosure and the mean-value form.
fn box_lower(e: &Expr, b: &VarBox<f64>, sl: &[Slot]) -> (f64, Vec<Interval<f64>>) {
    let naive = crate::expr::interval_bound(e, b).map(|i| i.lo).unwrap_or(f64::NEG_INFINITY);
    let Ok((_, ds)) = derivative_bounds(e, b, sl) else {
        return (naive, Vec::new());
    };
    let mut c = b.clone();
    for &s in sl {
        slot_set(&mut c, s, Interval::point(slot_iv(b, s).mid()));
    }
    let mvt = crate::expr::interval_bound(e, &c).map(|gc| {
        let mut acc = gc;
        for (k, &s) in sl.iter().enumerate() {
            let iv = slot_iv(b, s);
            let m = iv.mid();
            let off = Interval::new(iv.lo - m, iv.hi - m);
            acc = acc.add(&ds[k].mul(&off));
        }
        acc.lo
    });
    let lo = match mvt {
        Ok(v) if !v.is_nan() => naive.max(v),
        _ => naive,
    };
    (lo, ds)
}

/// Branch and bound: tries to prove `e >= target` on `b`.
///
/// Boxes are bisected until their lower bound reaches `target`, a midpoint
/// (inside the domain) falls below it, or `max_boxes` have been processed.
pub fn certify_lower(
    e: &Expr,
    b: &VarBox<f64>,
    geom: &Geometry,
    target: f64,
    max_boxes: usize,
) -> LowerCert {
    let sl = slots(e, b.n);
    let mut work = vec![b.clone()];
    let mut lower = f64::INFINITY;
    let mut boxes = 0;
    while let Some(bx) = work.pop() {
        boxes += 1;
        let (lb, ds) = box_lower(e, &bx, &sl);
        if lb >= target {
            lower = lower.min(lb);
            continue;
        }
        let mid = |v: &[Interval<f64>]| v.iter().map(|i| i.mid()).collect::<Vec<_>>();
        let (mx, mz, mw) = (mid(&bx.x), mid(&bx.z), mid(&bx.w));
        let x_ok = geom.inside(&mx);
        if x_ok {
            if let Ok(v) = eval_expr(e, &mx, &mz, &mw) {
                if v < target {
                    return LowerCert {
                        lower: lower.min(lb).min(v),
                        counterexample: Some(v),
                        boxes,
                    };
                }
            }
        }
        if boxes + work.len() >= max_boxes || sl.is_empty() {
            lower = lower.min(lb);
            continue;
        }
        // Split where width times derivative magnitude is largest.
        let score = |k: usize| {
            let w = slot_iv(&bx, sl[k]).width();
            let d = ds.get(k).map(|d| d.mag()).unwrap_or(1.0);
            if d.is_finite() {
                w * d.max(1e-300)
            } else {
                f64::INFINITY
            }
        };
        let k = (0..sl.len())
            .filter(|&k| slot_iv(&bx, sl[k]).width() > 0.0)
            .max_by(|&a, &b| score(a).total_cmp(&score(b)));
        let Some(k) = k else {
            lower = lower.min(lb);
            continue;
        };
        let (l, r) = slot_iv(&bx, sl[k]).bisect();
        let mut a = bx.clone();
        slot_set(&mut a, sl[k], l);
        let mut c = bx;
        slot_set(&mut c, sl[k], r);
        work.push(a);
        work.push(c);
    }
    LowerCert {
        lower,
        counterexample: None,
        boxes,
    }
}
