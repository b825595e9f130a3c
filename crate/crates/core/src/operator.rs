//! Divergence-form operators `L u = -div(A grad u + b u) + <c, grad u> + d u`.
//!
//! Assembly is a cell-centred flux form on the lattice of [`DiscreteDomain`].
//! Row `i` of the stored matrix `K` represents the integral of `L u` over the
//! cell of node `i`, so `L_h = K / h^n`. Diffusive face fluxes use the link
//! length `theta*h`; advective fluxes and the `c` term use face averages. With
//! this choice the matrix of the adjoint (b and c swapped) is exactly the
//! transpose of the primal matrix.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::mesh::DiscreteDomain;
use crate::scalar::Real;
use crate::sparse::Csr;

/// Coefficient callable on the closed domain.
pub type Coef<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

pub fn constant<T: Real>(v: T) -> Coef<T> {
    Arc::new(move |_| v)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("diffusion matrix is not elliptic at node {node} (x = {x:?})")]
    NotElliptic { node: usize, x: Vec<f64> },
    #[error("off-diagonal diffusion coefficients are not supported (node {node})")]
    OffDiagonal { node: usize },
    #[error("non-finite coefficient at node {node}")]
    NonFinite { node: usize },
    #[error("operator dimension {op} differs from domain dimension {dom}")]
    Dimension { op: usize, dom: usize },
}

/// Coefficients of a divergence-form operator.
#[derive(Clone)]
pub struct OperatorSpec<T> {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub a: Vec<Coef<T>>,
    pub b: Vec<Coef<T>>,
    pub c: Vec<Coef<T>>,
    pub d: Coef<T>,
    /// Declared `b == c` (formally self-adjoint).
    pub symmetric: bool,
    /// Identity used to share factorizations between equal operators.
    pub key: Option<String>,
}

impl<T: Real> fmt::Debug for OperatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSpec")
            .field("dim", &self.dim)
            .field("symmetric", &self.symmetric)
            .field("key", &self.key)
            .finish()
    }
}

impl<T: Real> OperatorSpec<T> {
    /// `-Δ` in dimension `dim`.
    pub fn laplacian(dim: usize) -> Self {
        let a = (0..dim * dim)
            .map(|k| constant(if k / dim == k % dim { T::one() } else { T::zero() }))
            .collect();
        OperatorSpec {
            dim,
            a,
            b: (0..dim).map(|_| constant(T::zero())).collect(),
            c: (0..dim).map(|_| constant(T::zero())).collect(),
            d: constant(T::zero()),
            symmetric: true,
            key: Some("laplacian".into()),
        }
    }

    /// Constant diagonal diffusion `A = diag(diag)`.
    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut s = Self::laplacian(n);
        s.a = (0..n * n)
            .map(|k| constant(if k / n == k % n { diag[k / n] } else { T::zero() }))
            .collect();
        s.key = None;
        s
    }

    pub fn with_d(mut self, d: Coef<T>) -> Self {
        self.d = d;
        self.key = None;
        self
    }

    pub fn with_b(mut self, b: Vec<Coef<T>>) -> Self {
        self.b = b;
        self.symmetric = false;
        self.key = None;
        self
    }

    pub fn with_c(mut self, c: Vec<Coef<T>>) -> Self {
        self.c = c;
        self.symmetric = false;
        self.key = None;
        self
    }

    /// Formal adjoint: b and c interchanged.
    pub fn adjoint(&self) -> Self {
        let mut s = self.clone();
        std::mem::swap(&mut s.b, &mut s.c);
        s.key = self.key.as_ref().map(|k| format!("adjoint({k})"));
        s
    }
}

/// Assembled operator restricted to interior rows.
#[derive(Clone, Debug)]
pub struct DiscreteOperator<T> {
    /// Interior-interior block of `K`.
    pub k_int: Csr<T>,
    /// Interior-boundary block of `K` (columns indexed by boundary position).
    pub k_bnd: Csr<T>,
    /// Cell volume `h^n`.
    pub scale: T,
    /// `b == c` at every node, so `k_int` is symmetric.
    pub symmetric: bool,
    pub n_interior: usize,
}

impl<T: Real> DiscreteOperator<T> {
    /// The interior matrix of `L_h`.
    pub fn matrix(&self) -> Csr<T> {
        self.k_int.scaled(T::one() / self.scale)
    }

    /// `L_h u` at interior nodes for a field on all nodes.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let (ui, ub) = u.split_at(self.n_interior);
        let a = self.k_int.mul_vec(ui);
        let b = self.k_bnd.mul_vec(ub);
        a.iter()
            .zip(&b)
            .map(|(&x, &y)| (x + y) / self.scale)
            .collect()
    }

    /// Positive diagonal and non-positive off-diagonal entries (both blocks).
    pub fn is_m_matrix(&self) -> bool {
        (0..self.n_interior).all(|i| {
            let (ix, v) = self.k_int.row(i);
            let ok_int = ix
                .iter()
                .zip(v)
                .all(|(&j, &a)| if j == i { a > T::zero() } else { a <= T::zero() });
            let (_, vb) = self.k_bnd.row(i);
            ok_int && vb.iter().all(|&a| a <= T::zero())
        })
    }
}

struct NodeCoefs<T> {
    a: Vec<T>,
    b: Vec<T>,
    c: Vec<T>,
    d: Vec<T>,
}

fn sample_coefs<T: Real>(
    spec: &OperatorSpec<T>,
    dom: &DiscreteDomain<T>,
) -> Result<NodeCoefs<T>, OperatorError> {
    let n = dom.dim();
    if spec.dim != n || spec.a.len() != n * n || spec.b.len() != n || spec.c.len() != n {
        return Err(OperatorError::Dimension { op: spec.dim, dom: n });
    }
    let nn = dom.n_nodes();
    let mut out = NodeCoefs {
        a: Vec::with_capacity(nn * n),
        b: Vec::with_capacity(nn * n),
        c: Vec::with_capacity(nn * n),
        d: Vec::with_capacity(nn),
    };
    for node in 0..nn {
        let x = dom.coord(node);
        for l in 0..n {
            for k in 0..n {
                let v = (spec.a[l * n + k])(x);
                if !v.is_finite() {
                    return Err(OperatorError::NonFinite { node });
                }
                if k != l && v != T::zero() {
                    return Err(OperatorError::OffDiagonal { node });
                }
                if k == l {
                    if !(v > T::zero()) {
                        return Err(OperatorError::NotElliptic {
                            node,
                            x: x.iter().map(|v| v.as_f64()).collect(),
                        });
                    }
                    out.a.push(v);
                }
            }
            out.b.push((spec.b[l])(x));
            out.c.push((spec.c[l])(x));
        }
        out.d.push((spec.d)(x));
        let last = out.b.len() - n;
        if out.b[last..].iter().chain(&out.c[last..]).any(|v| !v.is_finite())
            || !out.d[node].is_finite()
        {
            return Err(OperatorError::NonFinite { node });
        }
    }
    Ok(out)
}

/// Assembles `L_h` for `spec` on `dom`.
pub fn assemble<T: Real>(
    spec: &OperatorSpec<T>,
    dom: &DiscreteDomain<T>,
) -> Result<DiscreteOperator<T>, OperatorError> {
    let co = sample_coefs(spec, dom)?;
    let n = dom.dim();
    let h = dom.h();
    let n_int = dom.n_interior();
    let hn = h.powi(n as i32);
    let area = h.powi(n as i32 - 1);
    let half = T::lit(0.5);
    let mut rows_int = Vec::with_capacity(n_int);
    let mut rows_bnd = Vec::with_capacity(n_int);
    for i in 0..n_int {
        let mut ri: Vec<(usize, T)> = Vec::with_capacity(2 * n + 1);
        let mut rb: Vec<(usize, T)> = Vec::new();
        let mut diag = hn * co.d[i];
        for (k, link) in dom.links(i).iter().enumerate() {
            let l = k / 2;
            let s = if k % 2 == 0 { -T::one() } else { T::one() };
            let j = link.target;
            let af = (co.a[i * n + l] + co.a[j * n + l]) * half;
            let bf = (co.b[i * n + l] + co.b[j * n + l]) * half;
            let cf = (co.c[i * n + l] + co.c[j * n + l]) * half;
            let diff = area * af / (link.theta * h);
            let adv = -s * area * bf * half;
            let conv = s * area * cf * half;
            diag = diag + diff + adv - conv;
            let off = -diff + adv + conv;
            if j < n_int {
                ri.push((j, off));
            } else {
                rb.push((j - n_int, off));
            }
        }
        ri.push((i, diag));
        rows_int.push(ri);
        rows_bnd.push(rb);
    }
    let symmetric = co.b.iter().zip(&co.c).all(|(x, y)| x == y);
    Ok(DiscreteOperator {
        k_int: Csr::from_rows(n_int, rows_int),
        k_bnd: Csr::from_rows(dom.n_boundary(), rows_bnd),
        scale: hn,
        symmetric,
        n_interior: n_int,
    })
}

/// Assembles the formal adjoint `Lᵀ` (b and c swapped).
pub fn assemble_adjoint<T: Real>(
    spec: &OperatorSpec<T>,
    dom: &DiscreteDomain<T>,
) -> Result<DiscreteOperator<T>, OperatorError> {
    assemble(&spec.adjoint(), dom)
}

/// Tolerances for [`verify_assumptions`].
#[derive(Clone, Copy, Debug)]
pub struct AssumptionTolerances {
    pub symmetry: f64,
    pub sign: f64,
}

impl Default for AssumptionTolerances {
    fn default() -> Self {
        AssumptionTolerances {
            symmetry: 1e-10,
            sign: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AssumptionCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Numerical verification of the structural assumptions on the coefficients.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AssumptionReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ellipticity constant `max(lambda_max, 1/lambda_min)`.
    pub big_lambda: f64,
    pub symmetry_defect: f64,
    pub min_d_minus_div_b: f64,
    pub min_d_minus_div_c: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Checks (H1) finiteness, (H2) symmetry of A, (H3) uniform ellipticity and
/// (H4) `d - div b >= 0`, `d - div c >= 0` on the nodes of `dom`.
pub fn verify_assumptions<T: Real>(
    spec: &OperatorSpec<T>,
    dom: &DiscreteDomain<T>,
    tol: AssumptionTolerances,
) -> AssumptionReport {
    let n = spec.dim.min(dom.dim());
    let h = dom.h();
    let mut finite = true;
    let mut sym = 0.0f64;
    let mut lmin = f64::INFINITY;
    let mut lmax = f64::NEG_INFINITY;
    let mut min_b = f64::INFINITY;
    let mut min_c = f64::INFINITY;
    let mut x2 = vec![T::zero(); n];
    for node in 0..dom.n_nodes() {
        let x = dom.coord(node);
        let a: Vec<f64> = (0..n * n).map(|k| (spec.a[k])(x).as_f64()).collect();
        let dval = (spec.d)(x).as_f64();
        if a.iter().any(|v| !v.is_finite()) || !dval.is_finite() {
            finite = false;
            continue;
        }
        for p in 0..n {
            for q in 0..n {
                sym = sym.max((a[p * n + q] - a[q * n + p]).abs());
            }
        }
        let sa: Vec<f64> = (0..n * n)
            .map(|k| 0.5 * (a[k] + a[(k % n) * n + k / n]))
            .collect();
        let ev = symmetric_eigenvalues(&sa, n);
        lmin = lmin.min(ev[0]);
        lmax = lmax.max(ev[n - 1]);
        for l in 0..n {
            if !(spec.b[l])(x).is_finite() || !(spec.c[l])(x).is_finite() {
                finite = false;
            }
        }
        if !dom.is_interior(node) {
            continue;
        }
        // Centred differences of b and c with step h.
        let mut div_b = 0.0;
        let mut div_c = 0.0;
        for l in 0..n {
            x2.copy_from_slice(x);
            x2[l] = x[l] + h;
            let (bp, cp) = ((spec.b[l])(&x2).as_f64(), (spec.c[l])(&x2).as_f64());
            x2[l] = x[l] - h;
            let (bm, cm) = ((spec.b[l])(&x2).as_f64(), (spec.c[l])(&x2).as_f64());
            let two_h = 2.0 * h.as_f64();
            div_b += (bp - bm) / two_h;
            div_c += (cp - cm) / two_h;
        }
        min_b = min_b.min(dval - div_b);
        min_c = min_c.min(dval - div_c);
    }
    let big_lambda = if lmin > 0.0 {
        lmax.max(1.0 / lmin)
    } else {
        f64::INFINITY
    };
    let checks = vec![
        AssumptionCheck {
            name: "H1".into(),
            pass: finite,
            detail: "coefficients finite at every node".into(),
        },
        AssumptionCheck {
            name: "H2".into(),
            pass: finite && sym <= tol.symmetry,
            detail: format!("max |a_ij - a_ji| = {sym:e}"),
        },
        AssumptionCheck {
            name: "H3".into(),
            pass: finite && lmin > 0.0 && big_lambda.is_finite(),
            detail: format!("eigenvalues in [{lmin}, {lmax}], Lambda = {big_lambda}"),
        },
        AssumptionCheck {
            name: "H4".into(),
            pass: finite && min_b >= -tol.sign && min_c >= -tol.sign,
            detail: format!("min(d - div b) = {min_b}, min(d - div c) = {min_c}"),
        },
    ];
    AssumptionReport {
        lambda_min: lmin,
        lambda_max: lmax,
        big_lambda,
        symmetry_defect: sym,
        min_d_minus_div_b: min_b,
        min_d_minus_div_c: min_c,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;

    fn interval() -> DiscreteDomain<f64> {
        DiscreteDomain::<f64>::new(&DomainSpec::interval(0.0, 1.0, 0.25)).unwrap()
    }

    #[test]
    fn interval_laplacian_rows() {
        let op = assemble(&OperatorSpec::laplacian(1), &interval()).unwrap();
        let m = op.matrix().to_dense();
        assert_eq!(m[0], vec![32.0, -16.0, 0.0]);
        assert_eq!(m[1], vec![-16.0, 32.0, -16.0]);
        assert_eq!(m[2], vec![0.0, -16.0, 32.0]);
        assert!(op.is_m_matrix());
        assert!(op.symmetric);
    }

    #[test]
    fn zero_order_shift_adds_identity() {
        let dom = interval();
        let base = assemble(&OperatorSpec::laplacian(1), &dom).unwrap().matrix();
        let shifted = assemble(&OperatorSpec::laplacian(1).with_d(constant(1.0)), &dom)
            .unwrap()
            .matrix();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((shifted.get(i, j) - base.get(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaled_diffusion_scales_matrix() {
        let dom = DiscreteDomain::<f64>::new(&DomainSpec::unit_box(2, 0.125)).unwrap();
        let base = assemble(&OperatorSpec::laplacian(2), &dom).unwrap().matrix();
        let twice = assemble(&OperatorSpec::diagonal(&[2.0, 2.0]), &dom).unwrap().matrix();
        for (a, b) in base.val.iter().zip(&twice.val) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn adjoint_with_b_equal_c_is_identical() {
        let dom = DiscreteDomain::<f64>::new(&DomainSpec::ball(2, 1.0, 0.125)).unwrap();
        let v: Vec<Coef<f64>> = vec![Arc::new(|x: &[f64]| x[0]), constant(0.3)];
        let spec = OperatorSpec::laplacian(2).with_b(v.clone()).with_c(v);
        let p = assemble(&spec, &dom).unwrap();
        let q = assemble_adjoint(&spec, &dom).unwrap();
        assert_eq!(p.k_int, q.k_int);
        assert!(p.symmetric);
        assert!(p.k_int.asymmetry() < 1e-14);
    }

    #[test]
    fn adjoint_of_drift_is_convection() {
        let dom = DiscreteDomain::<f64>::new(&DomainSpec::ball(3, 1.0, 0.25)).unwrap();
        let e1 = vec![constant(1.0), constant(0.0), constant(0.0)];
        let zero = vec![constant(0.0); 3];
        let with_b = OperatorSpec::laplacian(3).with_b(e1.clone());
        let with_c = OperatorSpec::laplacian(3).with_c(e1).with_b(zero);
        let adj = assemble_adjoint(&with_b, &dom).unwrap();
        let direct = assemble(&with_c, &dom).unwrap();
        assert_eq!(adj.k_int, direct.k_int);
        let prim = assemble(&with_b, &dom).unwrap();
        assert_eq!(prim.k_int.transpose(), adj.k_int);
    }

    #[test]
    fn double_adjoint_is_primal() {
        let dom = DiscreteDomain::<f64>::new(&DomainSpec::unit_box(2, 0.125)).unwrap();
        let spec = OperatorSpec::laplacian(2).with_b(vec![
            Arc::new(|x: &[f64]| x[1]),
            constant(-0.5),
        ]);
        let a = assemble(&spec, &dom).unwrap();
        let b = assemble(&spec.adjoint().adjoint(), &dom).unwrap();
        assert_eq!(a.k_int, b.k_int);
        assert_eq!(a.k_bnd, b.k_bnd);
    }

    #[test]
    fn non_elliptic_is_rejected_with_node() {
        let dom = interval();
        let spec = OperatorSpec::diagonal(&[-1.0]);
        assert!(matches!(
            assemble(&spec, &dom),
            Err(OperatorError::NotElliptic { node: 0, .. })
        ));
    }

    #[test]
    fn laplacian_applies_exactly_to_quadratics_on_box() {
        let dom = DiscreteDomain::<f64>::new(&DomainSpec::unit_box(2, 0.125)).unwrap();
        let op = assemble(&OperatorSpec::laplacian(2), &dom).unwrap();
        let u = dom.field_from_fn(|x| x[0] * x[0] + x[1] * x[1]);
        for v in op.apply(&u.values) {
            assert!((v + 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn assumption_reports() {
        let dom = DiscreteDomain::<f64>::new(&DomainSpec::ball(3, 1.0, 0.25)).unwrap();
        let tol = AssumptionTolerances::default();
        let r = verify_assumptions(&OperatorSpec::laplacian(3), &dom, tol);
        assert!(r.passes());
        assert_eq!(r.big_lambda, 1.0);
        let neg = OperatorSpec::laplacian(3).with_d(constant(-1.0));
        let r = verify_assumptions(&neg, &dom, tol);
        assert!(!r.check("H4").unwrap().pass);
        assert!((r.min_d_minus_div_b + 1.0).abs() < 1e-12);
        let diag = OperatorSpec::diagonal(&[1.0, 2.0, 3.0]);
        let r = verify_assumptions(&diag, &dom, tol);
        assert_eq!((r.lambda_min, r.lambda_max, r.big_lambda), (1.0, 3.0, 3.0));
        assert!(r.check("H3").unwrap().pass);
    }

    #[test]
    fn jacobi_eigenvalues_of_full_matrix() {
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0], 3);
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
        assert!((ev[2] - 5.0).abs() < 1e-12);
    }
}
