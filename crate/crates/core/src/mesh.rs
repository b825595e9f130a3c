//! Uniform Cartesian discretization of a ball, a box or an interval.
//!
//! Nodes are numbered with all interior lattice points first and boundary
//! points after them. For boxes the boundary points are the lattice points on
//! the faces; for balls they are the intersections of the lattice lines with
//! the sphere (one per interior node and axis direction that leaves the ball),
//! each carrying its distance fraction `theta` to the owning interior node.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{unit_ball_measure, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid domain: {0}")]
    InvalidSpec(String),
    #[error("grid too coarse: axis {axis} has {count} interior nodes (need at least 3)")]
    TooCoarse { axis: usize, count: usize },
    #[error("box extent along axis {axis} is not a multiple of h")]
    Misaligned { axis: usize },
    #[error("point {0:?} lies outside the closed domain")]
    OutsideDomain(Vec<f64>),
    #[error("field has {got} values, expected {expected}")]
    FieldLength { got: usize, expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Ball,
    Box,
    Interval,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Ball => "ball",
            DomainKind::Box => "box",
            DomainKind::Interval => "interval",
        }
    }
}

/// Geometry and resolution of the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec<T> {
    pub kind: DomainKind,
    pub dim: usize,
    /// Ball center.
    pub center: Vec<T>,
    /// Ball radius.
    pub radius: T,
    /// Box / interval corners.
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub h: T,
}

impl<T: Real> DomainSpec<T> {
    pub fn ball(dim: usize, radius: T, h: T) -> Self {
        DomainSpec {
            kind: DomainKind::Ball,
            dim,
            center: vec![T::zero(); dim],
            radius,
            lower: Vec::new(),
            upper: Vec::new(),
            h,
        }
    }

    pub fn cuboid(lower: Vec<T>, upper: Vec<T>, h: T) -> Self {
        DomainSpec {
            kind: DomainKind::Box,
            dim: lower.len(),
            center: Vec::new(),
            radius: T::zero(),
            lower,
            upper,
            h,
        }
    }

    /// The unit cube `[0,1]^dim`.
    pub fn unit_box(dim: usize, h: T) -> Self {
        Self::cuboid(vec![T::zero(); dim], vec![T::one(); dim], h)
    }

    pub fn interval(a: T, b: T, h: T) -> Self {
        DomainSpec {
            kind: DomainKind::Interval,
            dim: 1,
            center: Vec::new(),
            radius: T::zero(),
            lower: vec![a],
            upper: vec![b],
            h,
        }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |m: &str| Err(MeshError::InvalidSpec(m.to_string()));
        if !(1..=3).contains(&self.dim) {
            return bad("dimension must be 1, 2 or 3");
        }
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return bad("spacing h must be positive");
        }
        match self.kind {
            DomainKind::Ball => {
                if self.center.len() != self.dim {
                    return bad("center length differs from dim");
                }
                if !(self.radius > T::zero()) || !self.radius.is_finite() {
                    return bad("radius must be positive");
                }
                if self.h >= self.radius {
                    return Err(MeshError::TooCoarse { axis: 0, count: 1 });
                }
            }
            DomainKind::Box | DomainKind::Interval => {
                if self.kind == DomainKind::Interval && self.dim != 1 {
                    return bad("interval domains are one-dimensional");
                }
                if self.lower.len() != self.dim || self.upper.len() != self.dim {
                    return bad("corner length differs from dim");
                }
                if self.lower.iter().zip(&self.upper).any(|(a, b)| !(a < b)) {
                    return bad("lower corner must be below upper corner");
                }
            }
        }
        Ok(())
    }
}

/// Neighbor of an interior node along one axis direction. `theta` is the
/// spacing in units of h (1 for lattice neighbors, (0, 1] for cut links).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link<T> {
    pub target: usize,
    pub theta: T,
}

#[derive(Clone, Debug)]
struct Lattice<T> {
    origin: Vec<T>,
    counts: Vec<usize>,
    node_of: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<T: Real> Lattice<T> {
    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    fn unflat(&self, mut f: usize, out: &mut [usize]) {
        for l in (0..self.counts.len()).rev() {
            out[l] = f % self.counts[l];
            f /= self.counts[l];
        }
    }

    fn len(&self) -> usize {
        self.counts.iter().product()
    }
}

/// Node values of a scalar function (interior nodes first, then boundary).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    pub values: Vec<T>,
    n_interior: usize,
}

impl<T: Real> ScalarField<T> {
    pub fn new(values: Vec<T>, n_interior: usize) -> Self {
        ScalarField { values, n_interior }
    }

    pub fn zeros(dom: &DiscreteDomain<T>) -> Self {
        Self::new(vec![T::zero(); dom.n_nodes()], dom.n_interior())
    }

    pub fn constant(dom: &DiscreteDomain<T>, v: T) -> Self {
        Self::new(vec![v; dom.n_nodes()], dom.n_interior())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn interior(&self) -> &[T] {
        &self.values[..self.n_interior]
    }

    pub fn boundary(&self) -> &[T] {
        &self.values[self.n_interior..]
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> T {
        self.values
            .iter()
            .fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }
}

/// Per-node gradient: `dim` components per node, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub dim: usize,
    pub values: Vec<T>,
}

impl<T: Real> VectorField<T> {
    pub fn at(&self, node: usize) -> &[T] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    pub fn component(&self, l: usize) -> Vec<T> {
        self.values
            .iter()
            .skip(l)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    /// Max over nodes of the max-norm of the gradient.
    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn component_sup(&self, l: usize) -> T {
        self.values
            .iter()
            .skip(l)
            .step_by(self.dim)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// The discretized closed domain.
#[derive(Clone, Debug)]
pub struct DiscreteDomain<T> {
    spec: DomainSpec<T>,
    dim: usize,
    h: T,
    coords: Vec<T>,
    n_interior: usize,
    links: Vec<Link<T>>,
    normals: Vec<T>,
    volume_weights: Vec<T>,
    surface_weights: Vec<T>,
    grad_ptr: Vec<usize>,
    grad_idx: Vec<usize>,
    grad_val: Vec<T>,
    lattice: Lattice<T>,
    diameter: T,
    omega_n: T,
    measure: T,
    boundary_measure: T,
}

/// Three-point derivative weights at 0 for samples at -a, 0, +b.
fn central_weights<T: Real>(a: T, b: T) -> [T; 3] {
    [
        -b / (a * (a + b)),
        (b - a) / (a * b),
        a / (b * (a + b)),
    ]
}

/// One-sided derivative weights at 0 for samples at 0, a, b (0 < a < b).
fn one_sided_weights<T: Real>(a: T, b: T) -> [T; 3] {
    [
        -(a + b) / (a * b),
        b / (a * (b - a)),
        -a / (b * (b - a)),
    ]
}

pub fn build_domain<T: Real>(spec: &DomainSpec<T>) -> Result<DiscreteDomain<T>, MeshError> {
    DiscreteDomain::new(spec)
}

impl<T: Real> DiscreteDomain<T> {
    pub fn new(spec: &DomainSpec<T>) -> Result<Self, MeshError> {
        spec.validate()?;
        match spec.kind {
            DomainKind::Ball => Self::build_ball(spec),
            DomainKind::Box | DomainKind::Interval => Self::build_box(spec),
        }
    }

    fn build_ball(spec: &DomainSpec<T>) -> Result<Self, MeshError> {
        let n = spec.dim;
        let h = spec.h;
        let r = spec.radius;
        let c = &spec.center;
        let k = (r / h).ceil().to_usize().unwrap_or(0) + 1;
        let counts = vec![2 * k + 1; n];
        let origin: Vec<T> = c.iter().map(|&ci| ci - T::from_usize_(k) * h).collect();
        let mut lattice = Lattice {
            origin,
            counts,
            node_of: Vec::new(),
        };
        let total = lattice.len();
        let coord_of = |idx: &[usize], l: usize| -> T {
            c[l] + (T::from_usize_(idx[l]) - T::from_usize_(k)) * h
        };
        let margin = r - T::lit(1e-6) * h;
        let margin2 = margin * margin;

        let mut node_of = vec![NONE; total];
        let mut coords = Vec::new();
        let mut interior_lattice = Vec::new();
        let mut idx = vec![0usize; n];
        for f in 0..total {
            lattice.unflat(f, &mut idx);
            let d2 = (0..n).fold(T::zero(), |s, l| {
                let q = coord_of(&idx, l) - c[l];
                s + q * q
            });
            if d2 < margin2 {
                node_of[f] = interior_lattice.len();
                interior_lattice.push(f);
                coords.extend((0..n).map(|l| coord_of(&idx, l)));
            }
        }
        lattice.node_of = node_of;
        let n_int = interior_lattice.len();

        // Interior node count along each axis line through the center.
        for axis in 0..n {
            let count = (0..lattice.counts[axis])
                .filter(|&i| {
                    let mut id = vec![k; n];
                    id[axis] = i;
                    lattice.node_of[lattice.flat(&id)] != NONE
                })
                .count();
            if count < 3 {
                return Err(MeshError::TooCoarse { axis, count });
            }
        }

        let hn = h.powi(n as i32);
        let hn1 = h.powi(n as i32 - 1);
        let mut links = Vec::with_capacity(2 * n * n_int);
        let mut normals = Vec::new();
        let mut owners: Vec<(usize, usize, i32)> = Vec::new();
        let mut thetas = Vec::new();
        let mut bcoords = Vec::new();
        for (node, &f) in interior_lattice.iter().enumerate() {
            lattice.unflat(f, &mut idx);
            for l in 0..n {
                for s in [-1i32, 1] {
                    let inside = if s < 0 { idx[l] > 0 } else { idx[l] + 1 < lattice.counts[l] };
                    let nb = if inside {
                        let mut j = idx.clone();
                        j[l] = if s < 0 { idx[l] - 1 } else { idx[l] + 1 };
                        lattice.node_of[lattice.flat(&j)]
                    } else {
                        NONE
                    };
                    if nb != NONE {
                        links.push(Link { target: nb, theta: T::one() });
                        continue;
                    }
                    // Crossing of the ray x + t s e_l with the sphere.
                    let p = &coords[node * n..(node + 1) * n];
                    let q2 = (0..n).fold(T::zero(), |acc, m| {
                        let d = p[m] - c[m];
                        acc + d * d
                    });
                    let ql = T::lit(s as f64) * (p[l] - c[l]);
                    let t = -ql + (ql * ql - (q2 - r * r)).max(T::zero()).sqrt();
                    let theta = t / h;
                    let b = n_int + owners.len();
                    links.push(Link { target: b, theta });
                    let mut pos = p.to_vec();
                    pos[l] += T::lit(s as f64) * t;
                    normals.extend((0..n).map(|m| (pos[m] - c[m]) / r));
                    bcoords.extend(pos);
                    owners.push((node, l, s));
                    thetas.push(theta);
                }
            }
        }
        let n_bnd = owners.len();
        coords.extend(bcoords);

        let mut volume_weights = vec![hn; n_int];
        let mut surface_weights = Vec::with_capacity(n_bnd);
        let half = T::lit(0.5);
        let nn = T::from_usize_(n);
        for (b, &(_, l, _)) in owners.iter().enumerate() {
            volume_weights.push((thetas[b] - half) * hn / nn);
            surface_weights.push(hn1 * normals[b * n + l].abs());
        }

        // Gradient stencils.
        let mut grad_ptr = vec![0usize];
        let mut grad_idx = Vec::new();
        let mut grad_val = Vec::new();
        for node in 0..n_int {
            for l in 0..n {
                let lm = links[node * 2 * n + 2 * l];
                let lp = links[node * 2 * n + 2 * l + 1];
                let w = central_weights(lm.theta * h, lp.theta * h);
                grad_idx.extend([lm.target, node, lp.target]);
                grad_val.extend(w);
                grad_ptr.push(grad_idx.len());
            }
        }
        for (b, &(owner, axis, s)) in owners.iter().enumerate() {
            let bnode = n_int + b;
            for l in 0..n {
                if l == axis {
                    let a = thetas[b] * h;
                    // Next point inward along the same line.
                    let back = links[owner * 2 * n + 2 * l + if s < 0 { 1 } else { 0 }];
                    let bb = a + back.theta * h;
                    let w = one_sided_weights(a, bb);
                    let sign = -T::lit(s as f64);
                    grad_idx.extend([bnode, owner, back.target]);
                    grad_val.extend(w.iter().map(|&v| v * sign));
                } else {
                    let lo = grad_ptr[owner * n + l];
                    let hi = grad_ptr[owner * n + l + 1];
                    let (ix, vals) = (grad_idx[lo..hi].to_vec(), grad_val[lo..hi].to_vec());
                    grad_idx.extend(ix);
                    grad_val.extend(vals);
                }
                grad_ptr.push(grad_idx.len());
            }
        }

        let omega = unit_ball_measure(n);
        let rr = r.as_f64();
        Ok(DiscreteDomain {
            spec: spec.clone(),
            dim: n,
            h,
            coords,
            n_interior: n_int,
            links,
            normals,
            volume_weights,
            surface_weights,
            grad_ptr,
            grad_idx,
            grad_val,
            lattice,
            diameter: T::lit(2.0) * r,
            omega_n: T::lit(omega),
            measure: T::lit(omega * rr.powi(n as i32)),
            boundary_measure: T::lit(n as f64 * omega * rr.powi(n as i32 - 1)),
        })
    }

    fn build_box(spec: &DomainSpec<T>) -> Result<Self, MeshError> {
        let n = spec.dim;
        let h = spec.h;
        let mut counts = Vec::with_capacity(n);
        for l in 0..n {
            let len = spec.upper[l] - spec.lower[l];
            let steps = (len / h).round();
            if ((steps * h - len) / h).abs() > T::lit(1e-6) {
                return Err(MeshError::Misaligned { axis: l });
            }
            let c = steps.to_usize().unwrap_or(0) + 1;
            if c < 5 {
                return Err(MeshError::TooCoarse {
                    axis: l,
                    count: c.saturating_sub(2),
                });
            }
            counts.push(c);
        }
        let mut lattice = Lattice {
            origin: spec.lower.clone(),
            counts,
            node_of: Vec::new(),
        };
        let total = lattice.len();
        let mut idx = vec![0usize; n];
        let is_int = |idx: &[usize], counts: &[usize]| {
            idx.iter().zip(counts).all(|(&i, &c)| i > 0 && i + 1 < c)
        };
        let mut node_of = vec![NONE; total];
        let mut order = Vec::with_capacity(total);
        for f in 0..total {
            lattice.unflat(f, &mut idx);
            if is_int(&idx, &lattice.counts) {
                node_of[f] = order.len();
                order.push(f);
            }
        }
        let n_int = order.len();
        for f in 0..total {
            lattice.unflat(f, &mut idx);
            if !is_int(&idx, &lattice.counts) {
                node_of[f] = order.len();
                order.push(f);
            }
        }
        lattice.node_of = node_of;

        let hn = h.powi(n as i32);
        let hn1 = h.powi(n as i32 - 1);
        let half = T::lit(0.5);
        let mut coords = Vec::with_capacity(total * n);
        let mut volume_weights = Vec::with_capacity(total);
        let mut surface_weights = Vec::new();
        let mut normals = Vec::new();
        let mut links = Vec::with_capacity(2 * n * n_int);
        let mut grad_ptr = vec![0usize];
        let mut grad_idx = Vec::new();
        let mut grad_val = Vec::new();
        for (node, &f) in order.iter().enumerate() {
            lattice.unflat(f, &mut idx);
            let at_end = |l: usize| idx[l] == 0 || idx[l] + 1 == lattice.counts[l];
            coords.extend((0..n).map(|l| spec.lower[l] + T::from_usize_(idx[l]) * h));
            let vw = (0..n).fold(hn, |w, l| if at_end(l) { w * half } else { w });
            volume_weights.push(vw);
            if node < n_int {
                for l in 0..n {
                    for s in [-1i64, 1] {
                        let mut j = idx.clone();
                        j[l] = (idx[l] as i64 + s) as usize;
                        links.push(Link {
                            target: lattice.node_of[lattice.flat(&j)],
                            theta: T::one(),
                        });
                    }
                }
            } else {
                let mut nrm = vec![T::zero(); n];
                let mut sw = T::zero();
                for l in 0..n {
                    if !at_end(l) {
                        continue;
                    }
                    nrm[l] = if idx[l] == 0 { -T::one() } else { T::one() };
                    let face = (0..n)
                        .filter(|&k| k != l)
                        .fold(hn1, |w, k| if at_end(k) { w * half } else { w });
                    sw += face;
                }
                let len = nrm.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
                normals.extend(nrm.into_iter().map(|v| v / len));
                surface_weights.push(sw);
            }
            for l in 0..n {
                let c = lattice.counts[l];
                let nb = |off: i64| {
                    let mut j = idx.clone();
                    j[l] = (idx[l] as i64 + off) as usize;
                    lattice.node_of[lattice.flat(&j)]
                };
                if idx[l] > 0 && idx[l] + 1 < c {
                    let w = central_weights(h, h);
                    grad_idx.extend([nb(-1), node, nb(1)]);
                    grad_val.extend(w);
                } else if idx[l] == 0 {
                    let w = one_sided_weights(h, h + h);
                    grad_idx.extend([node, nb(1), nb(2)]);
                    grad_val.extend(w);
                } else {
                    let w = one_sided_weights(h, h + h);
                    grad_idx.extend([node, nb(-1), nb(-2)]);
                    grad_val.extend(w.iter().map(|&v| -v));
                }
                grad_ptr.push(grad_idx.len());
            }
        }

        let lens: Vec<f64> = (0..n)
            .map(|l| (spec.upper[l] - spec.lower[l]).as_f64())
            .collect();
        let vol: f64 = lens.iter().product();
        let area: f64 = if n == 1 {
            2.0
        } else {
            (0..n).map(|l| 2.0 * vol / lens[l]).sum()
        };
        let diam = lens.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(DiscreteDomain {
            spec: spec.clone(),
            dim: n,
            h,
            coords,
            n_interior: n_int,
            links,
            normals,
            volume_weights,
            surface_weights,
            grad_ptr,
            grad_idx,
            grad_val,
            lattice,
            diameter: T::lit(diam),
            omega_n: T::lit(unit_ball_measure(n)),
            measure: T::lit(vol),
            boundary_measure: T::lit(area),
        })
    }

    pub fn spec(&self) -> &DomainSpec<T> {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.volume_weights.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.n_nodes() - self.n_interior
    }

    pub fn is_interior(&self, node: usize) -> bool {
        node < self.n_interior
    }

    pub fn coord(&self, node: usize) -> &[T] {
        &self.coords[node * self.dim..(node + 1) * self.dim]
    }

    /// The 2n links of an interior node, ordered (axis 0 -, axis 0 +, axis 1 -, ...).
    pub fn links(&self, node: usize) -> &[Link<T>] {
        let k = 2 * self.dim;
        &self.links[node * k..(node + 1) * k]
    }

    /// Outward unit normal at boundary node `node` (global index).
    pub fn normal(&self, node: usize) -> &[T] {
        let b = node - self.n_interior;
        &self.normals[b * self.dim..(b + 1) * self.dim]
    }

    pub fn volume_weights(&self) -> &[T] {
        &self.volume_weights
    }

    /// Surface weights, indexed by boundary position (global index minus n_interior).
    pub fn surface_weights(&self) -> &[T] {
        &self.surface_weights
    }

    /// diam(O).
    pub fn diameter(&self) -> T {
        self.diameter
    }

    /// Measure of the unit ball in R^n.
    pub fn omega_n(&self) -> T {
        self.omega_n
    }

    /// Exact |O|.
    pub fn measure(&self) -> T {
        self.measure
    }

    /// Exact |dO| (counting measure in one dimension).
    pub fn boundary_measure(&self) -> T {
        self.boundary_measure
    }

    /// Gradient stencil of `node` along axis `l` as (indices, weights).
    pub fn gradient_stencil(&self, node: usize, l: usize) -> (&[usize], &[T]) {
        let r = node * self.dim + l;
        let (lo, hi) = (self.grad_ptr[r], self.grad_ptr[r + 1]);
        (&self.grad_idx[lo..hi], &self.grad_val[lo..hi])
    }

    pub fn field_from_fn(&self, f: impl Fn(&[T]) -> T) -> ScalarField<T> {
        let values = (0..self.n_nodes()).map(|i| f(self.coord(i))).collect();
        ScalarField::new(values, self.n_interior)
    }

    pub fn check_field(&self, u: &ScalarField<T>) -> Result<(), MeshError> {
        if u.len() != self.n_nodes() {
            return Err(MeshError::FieldLength {
                got: u.len(),
                expected: self.n_nodes(),
            });
        }
        Ok(())
    }

    /// Discrete gradient at every node.
    pub fn gradient(&self, u: &ScalarField<T>) -> VectorField<T> {
        self.gradient_of(&u.values)
    }

    pub fn gradient_of(&self, u: &[T]) -> VectorField<T> {
        let n = self.dim;
        let mut values = Vec::with_capacity(self.n_nodes() * n);
        for r in 0..self.n_nodes() * n {
            let (lo, hi) = (self.grad_ptr[r], self.grad_ptr[r + 1]);
            let v = (lo..hi).fold(T::zero(), |s, k| s + self.grad_val[k] * u[self.grad_idx[k]]);
            values.push(v);
        }
        VectorField { dim: n, values }
    }

    /// Volume quadrature of a node field.
    pub fn integrate(&self, f: &ScalarField<T>) -> T {
        self.integrate_values(&f.values)
    }

    pub fn integrate_values(&self, f: &[T]) -> T {
        f.iter()
            .zip(&self.volume_weights)
            .fold(T::zero(), |s, (&v, &w)| s + v * w)
    }

    /// Surface quadrature of values on the boundary set.
    pub fn boundary_integrate(&self, f_bnd: &[T]) -> T {
        f_bnd
            .iter()
            .zip(&self.surface_weights)
            .fold(T::zero(), |s, (&v, &w)| s + v * w)
    }

    /// Membership in the closed domain, with slack `tol`.
    pub fn contains(&self, p: &[T], tol: T) -> bool {
        if p.len() != self.dim {
            return false;
        }
        match self.spec.kind {
            DomainKind::Ball => {
                let d2 = p
                    .iter()
                    .zip(&self.spec.center)
                    .fold(T::zero(), |s, (&a, &c)| s + (a - c) * (a - c));
                d2.sqrt() <= self.spec.radius + tol
            }
            _ => p
                .iter()
                .zip(self.spec.lower.iter().zip(&self.spec.upper))
                .all(|(&x, (&a, &b))| x >= a - tol && x <= b + tol),
        }
    }

    /// Axis-aligned bounding box of the closed domain.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        match self.spec.kind {
            DomainKind::Ball => (
                self.spec.center.iter().map(|&c| c - self.spec.radius).collect(),
                self.spec.center.iter().map(|&c| c + self.spec.radius).collect(),
            ),
            _ => (self.spec.lower.clone(), self.spec.upper.clone()),
        }
    }

    /// Multilinear interpolation of node values at `p`.
    ///
    /// Lattice corners that are not nodes (outside the ball) are dropped and
    /// the remaining weights renormalized.
    pub fn interpolate(&self, values: &[T], p: &[T]) -> Result<T, MeshError> {
        let st = self.interpolation_stencil(p)?;
        Ok(st.iter().fold(T::zero(), |acc, &(i, w)| acc + w * values[i]))
    }

    /// Node weights of [`Self::interpolate`] at `p` (summing to one).
    pub fn interpolation_stencil(&self, p: &[T]) -> Result<Vec<(usize, T)>, MeshError> {
        let tol = T::lit(1e-9) * (T::one() + self.diameter);
        if !self.contains(p, tol) {
            return Err(MeshError::OutsideDomain(p.iter().map(|v| v.as_f64()).collect()));
        }
        let n = self.dim;
        let mut base = vec![0usize; n];
        let mut frac = vec![T::zero(); n];
        for l in 0..n {
            let s = (p[l] - self.lattice.origin[l]) / self.h;
            let max_cell = self.lattice.counts[l] - 2;
            let i = s.floor().max(T::zero()).to_usize().unwrap_or(0).min(max_cell);
            base[l] = i;
            frac[l] = (s - T::from_usize_(i)).max(T::zero()).min(T::one());
        }
        let mut out = Vec::with_capacity(1 << n);
        let mut wsum = T::zero();
        let mut corner = vec![0usize; n];
        for mask in 0..(1usize << n) {
            let mut w = T::one();
            for l in 0..n {
                let bit = (mask >> l) & 1;
                corner[l] = base[l] + bit;
                w *= if bit == 1 { frac[l] } else { T::one() - frac[l] };
            }
            let node = self.lattice.node_of[self.lattice.flat(&corner)];
            if node != NONE && w > T::zero() {
                out.push((node, w));
                wsum += w;
            }
        }
        if wsum > T::lit(1e-12) {
            return Ok(out.into_iter().map(|(i, w)| (i, w / wsum)).collect());
        }
        // Nearest node fallback (cells straddling the sphere).
        let nearest = (0..self.n_nodes())
            .min_by(|&a, &b| {
                let da = dist2(self.coord(a), p);
                let db = dist2(self.coord(b), p);
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        Ok(vec![(nearest, T::one())])
    }

    /// Deterministic farthest-point subsample of the interior nodes, seeded
    /// at the node nearest the domain centroid.
    pub fn farthest_point_samples(&self, count: usize) -> Vec<usize> {
        let n_int = self.n_interior;
        if count >= n_int {
            return (0..n_int).collect();
        }
        let (lo, hi) = self.bounding_box();
        let mid: Vec<T> = lo.iter().zip(&hi).map(|(&a, &b)| (a + b) * T::lit(0.5)).collect();
        let first = (0..n_int)
            .min_by(|&a, &b| {
                dist2(self.coord(a), &mid)
                    .partial_cmp(&dist2(self.coord(b), &mid))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let mut chosen = vec![first];
        let mut d: Vec<T> = (0..n_int).map(|i| dist2(self.coord(i), self.coord(first))).collect();
        while chosen.len() < count {
            let (next, _) = d
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
            chosen.push(next);
            for i in 0..n_int {
                let dn = dist2(self.coord(i), self.coord(next));
                if dn < d[i] {
                    d[i] = dn;
                }
            }
        }
        chosen
    }

    /// Euclidean distance from an interior node to the continuum boundary.
    pub fn distance_to_boundary(&self, p: &[T]) -> T {
        match self.spec.kind {
            DomainKind::Ball => {
                let d = dist2(p, &self.spec.center).sqrt();
                self.spec.radius - d
            }
            _ => p
                .iter()
                .zip(self.spec.lower.iter().zip(&self.spec.upper))
                .fold(T::infinity(), |m, (&x, (&a, &b))| m.min(x - a).min(b - x)),
        }
    }
}

pub(crate) fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ball(h: f64) -> DiscreteDomain<f64> {
        DiscreteDomain::new(&DomainSpec::ball(3, 1.0, h)).unwrap()
    }

    #[test]
    fn interval_quarter_spacing() {
        let d = DiscreteDomain::new(&DomainSpec::interval(0.0, 1.0, 0.25)).unwrap();
        assert_eq!(d.n_interior(), 3);
        assert_eq!(d.n_boundary(), 2);
        let xs: Vec<f64> = (0..3).map(|i| d.coord(i)[0]).collect();
        assert_eq!(xs, vec![0.25, 0.5, 0.75]);
        assert!((d.integrate(&ScalarField::constant(&d, 1.0)) - 1.0).abs() < 1e-15);
        assert_eq!(d.boundary_integrate(&[1.0, 1.0]), 2.0);
    }

    #[test]
    fn ball_volume_and_area() {
        let d = ball(1.0 / 16.0);
        let one = ScalarField::constant(&d, 1.0);
        let vol = d.integrate(&one);
        assert!((vol / (4.0 * PI / 3.0) - 1.0).abs() < 0.02, "vol {vol}");
        let area = d.boundary_integrate(one.boundary());
        assert!((area / (4.0 * PI) - 1.0).abs() < 0.05, "area {area}");
        assert!((d.diameter() - 2.0).abs() < 1e-15);
        assert!((d.omega_n() - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn unit_cube_area_and_diameter() {
        let d = DiscreteDomain::<f64>::new(&DomainSpec::unit_box(3, 0.125)).unwrap();
        let one = ScalarField::constant(&d, 1.0);
        assert!((d.diameter() - 3f64.sqrt()).abs() < 1e-14);
        let area = d.boundary_integrate(one.boundary());
        assert!((area - 6.0).abs() < 0.05 * 6.0, "area {area}");
        assert!((d.integrate(&one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let d = ball(0.125);
        let z = ScalarField::zeros(&d);
        assert_eq!(d.integrate(&z), 0.0);
        assert_eq!(d.boundary_integrate(z.boundary()), 0.0);
    }

    #[test]
    fn too_coarse_grids_are_rejected() {
        assert!(matches!(
            DiscreteDomain::new(&DomainSpec::interval(0.0, 1.0, 0.5)),
            Err(MeshError::TooCoarse { .. })
        ));
        assert!(DiscreteDomain::new(&DomainSpec::ball(3, 1.0, 1.5)).is_err());
        assert!(matches!(
            DiscreteDomain::new(&DomainSpec::interval(0.0, 1.0, 0.3)),
            Err(MeshError::Misaligned { .. })
        ));
    }

    #[test]
    fn every_interior_node_has_classified_neighbors() {
        let d = ball(0.125);
        for i in 0..d.n_interior() {
            for link in d.links(i) {
                assert!(link.target < d.n_nodes());
                assert!(link.theta > 0.0 && link.theta <= 1.0 + 1e-12);
                if link.target >= d.n_interior() {
                    let p = d.coord(link.target);
                    let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!((r - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let d = ball(0.125);
        let c = d.field_from_fn(|_| 3.5);
        let g = d.gradient(&c);
        assert!(g.sup_norm() < 1e-12);
        let lin = d.field_from_fn(|x| 2.0 * x[0] - x[1] + 0.5 * x[2] + 1.0);
        let g = d.gradient(&lin);
        for i in 0..d.n_nodes() {
            let v = g.at(i);
            assert!((v[0] - 2.0).abs() < 1e-9, "node {i} {v:?}");
            assert!((v[1] + 1.0).abs() < 1e-9);
            assert!((v[2] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_of_linear_on_box_is_exact() {
        let d = DiscreteDomain::<f64>::new(&DomainSpec::unit_box(3, 0.125)).unwrap();
        let u = d.field_from_fn(|x| x[0]);
        let g = d.gradient(&u);
        for i in 0..d.n_nodes() {
            assert!((g.at(i)[0] - 1.0).abs() < 1e-12);
            assert!(g.at(i)[1].abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_quadratic_on_ball_is_second_order() {
        let err = |h: f64| {
            let d = ball(h);
            let u = d.field_from_fn(|x| x.iter().map(|v| v * v).sum());
            let g = d.gradient(&u);
            (0..d.n_interior())
                .map(|i| {
                    let x = d.coord(i);
                    (0..3).map(|l| (g.at(i)[l] - 2.0 * x[l]).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        // Three-point formulas are exact on quadratics.
        assert!(err(1.0 / 16.0) < 1e-10);
    }

    #[test]
    fn quadrature_refinement_on_ball() {
        let vol = 4.0 * PI / 3.0;
        let area = 4.0 * PI;
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let d = ball(h);
            let one = ScalarField::constant(&d, 1.0);
            let ev = (d.integrate(&one) - vol).abs();
            let ea = (d.boundary_integrate(one.boundary()) - area).abs();
            assert!(ev < prev.0, "volume error {ev} at h={h}");
            assert!(ea < prev.1, "area error {ea} at h={h}");
            prev = (ev, ea);
        }
        assert!(prev.1 / area < 0.05);
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let d = DiscreteDomain::<f64>::new(&DomainSpec::unit_box(2, 0.125)).unwrap();
        let u = d.field_from_fn(|x| 1.0 + 2.0 * x[0] - 3.0 * x[1]);
        let v = d.interpolate(&u.values, &[0.33, 0.71]).unwrap();
        assert!((v - (1.0 + 0.66 - 2.13)).abs() < 1e-12);
        assert!(d.interpolate(&u.values, &[1.5, 0.0]).is_err());
    }

    #[test]
    fn farthest_points_are_distinct() {
        let d = ball(0.125);
        let s = d.farthest_point_samples(32);
        let mut t = s.clone();
        t.sort();
        t.dedup();
        assert_eq!(t.len(), 32);
    }

    #[test]
    fn single_precision_domain() {
        let d = DiscreteDomain::<f32>::new(&DomainSpec::interval(0.0, 1.0, 0.125)).unwrap();
        let one = ScalarField::constant(&d, 1.0f32);
        assert!((d.integrate(&one) - 1.0).abs() < 1e-6);
    }
}
