use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::system::{SolverError, System};
use crate::expr::FieldSet;
use crate::mesh::ScalarField;
use crate::scalar::Real;

/// `A(u) = T(u) + Gamma(u)`: per equation `lambda_k G_k(F_k(u)) + eta_k h_k[u] gamma_k`.
pub fn apply_a<T: Real>(sys: &System<T>, u: &[ScalarField<T>]) -> Result<Vec<ScalarField<T>>, SolverError> {
    check_fields(sys, u)?;
    let fs = FieldSet::new(sys.dom(), u);
    (0..sys.m()).map(|k| apply_k(sys, k, &fs)).collect()
}

fn apply_k<T: Real>(sys: &System<T>, k: usize, fs: &FieldSet<T>) -> Result<ScalarField<T>, SolverError> {
    let eq = &sys.spec.equations[k];
    let dom = sys.dom();
    let mut out = if eq.lambda != 0.0 {
        let f = sys.nemytskii(k, fs)?;
        let mut g = sys.green(k).green_apply(&f).map_err(|source| SolverError::Green { k: k + 1, source })?;
        let lam = T::lit(eq.lambda);
        g.values.iter_mut().for_each(|v| *v *= lam);
        g
    } else {
        ScalarField::zeros(dom)
    };
    if eq.eta != 0.0 {
        let c = T::lit(eq.eta) * sys.functional(k, fs)?;
        for (v, &g) in out.values.iter_mut().zip(&sys.gamma(k).values) {
            *v += c * g;
        }
    }
    Ok(out)
}

fn check_fields<T: Real>(sys: &System<T>, u: &[ScalarField<T>]) -> Result<(), SolverError> {
    if u.len() != sys.m() {
        return Err(SolverError::Invalid(format!("expected {} fields, got {}", sys.m(), u.len())));
    }
    for f in u {
        sys.dom().check_field(f).map_err(|e| SolverError::Invalid(e.to_string()))?;
    }
    Ok(())
}

/// `max(||u||_inf, ||d_l u||_inf)` over all fields and axes.
pub fn c1_norm<T: Real>(sys: &System<T>, u: &[ScalarField<T>]) -> f64 {
    u.iter()
        .map(|f| {
            let g = sys.dom().gradient(f);
            f.sup_norm().as_f64().max(g.sup_norm().as_f64())
        })
        .fold(0.0, f64::max)
}

pub fn sup_norm<T: Real>(u: &[ScalarField<T>]) -> f64 {
    u.iter().map(|f| f.sup_norm().as_f64()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Residual {
    /// `||L_h u_k - lambda_k F_k(u)||_inf` over interior nodes.
    pub interior_raw: Vec<f64>,
    /// `interior_raw / (1 + lambda_k max|F_k(u)|)`.
    pub interior: Vec<f64>,
    /// `max |u_k - eta_k zeta_k h_k[u]|` over boundary nodes.
    pub boundary: Vec<f64>,
}

impl Residual {
    pub fn max_interior(&self) -> f64 {
        self.interior.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_boundary(&self) -> f64 {
        self.boundary.iter().copied().fold(0.0, f64::max)
    }
}

pub fn residual<T: Real>(sys: &System<T>, u: &[ScalarField<T>]) -> Result<Residual, SolverError> {
    check_fields(sys, u)?;
    let dom = sys.dom();
    let fs = FieldSet::new(dom, u);
    let n_int = dom.n_interior();
    let mut out = Residual {
        interior_raw: Vec::new(),
        interior: Vec::new(),
        boundary: Vec::new(),
    };
    for k in 0..sys.m() {
        let eq = &sys.spec.equations[k];
        let lu = sys.green(k).operator().apply(&u[k].values);
        let f = if eq.lambda != 0.0 { sys.nemytskii(k, &fs)? } else { vec![T::zero(); n_int] };
        let lam = T::lit(eq.lambda);
        let mut raw = 0.0f64;
        let mut fmax = 0.0f64;
        for i in 0..n_int {
            raw = raw.max((lu[i] - lam * f[i]).abs().as_f64());
            fmax = fmax.max(f[i].abs().as_f64());
        }
        out.interior_raw.push(raw);
        out.interior.push(raw / (1.0 + eq.lambda * fmax));
        let hv = if eq.eta != 0.0 { sys.functional(k, &fs)? } else { T::zero() };
        let c = T::lit(eq.eta) * hv;
        let b = u[k].boundary().iter().zip(sys.zeta(k)).map(|(&v, &z)| (v - c * z).abs().as_f64()).fold(0.0, f64::max);
        out.boundary.push(b);
    }
    Ok(out)
}

/// Starting point of the iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    Zero,
    /// `rho0 * phi` in every component, `phi` the principal eigenfunction of
    /// the first operator normalized to sup norm one.
    Eigen,
    Constant(f64),
    /// Random affine fields inside the cone of the given radii.
    Random(u64),
}

/// Builds the start fields. `rho` bounds values and gradients of random
/// starts; `eigen` is `(rho0, phi)` for [`Start::Eigen`].
pub fn initial_fields<T: Real>(sys: &System<T>, start: &Start, rho: &[f64], eigen: Option<(f64, &ScalarField<T>)>) -> Result<Vec<ScalarField<T>>, SolverError> {
    let dom = sys.dom();
    let m = sys.m();
    Ok(match start {
        Start::Zero => (0..m).map(|_| ScalarField::zeros(dom)).collect(),
        Start::Constant(v) => (0..m).map(|_| ScalarField::constant(dom, T::lit(*v))).collect(),
        Start::Eigen => {
            let (rho0, phi) = eigen.ok_or_else(|| SolverError::Invalid("eigen start needs the principal eigenfunction".into()))?;
            let s = T::lit(rho0) / phi.sup_norm();
            (0..m).map(|_| ScalarField::new(phi.values.iter().map(|&v| v * s).collect(), dom.n_interior())).collect()
        }
        Start::Random(seed) => {
            if rho.len() != m {
                return Err(SolverError::Invalid("random start needs one radius per equation".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let (lo, hi) = dom.bounding_box();
            let n = dom.dim();
            let centre: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| 0.5 * (a + b).as_f64()).collect();
            let half: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| 0.5 * (b - a).as_f64()).collect();
            (0..m)
                .map(|j| {
                    let r = rho[j];
                    let c = r * rng.random_range(0.25..0.75);
                    // Slopes keep values in [0, r] and gradient components below r.
                    let a: Vec<f64> = (0..n).map(|l| rng.random_range(-1.0..1.0) * r.min(0.25 * r / (n as f64 * half[l].max(1e-300)))).collect();
                    dom.field_from_fn(|x| {
                        let v = c + (0..n).map(|l| a[l] * (x[l].as_f64() - centre[l])).sum::<f64>();
                        T::lit(v)
                    })
                })
                .collect()
        }
    })
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// `theta` in `u <- (1 - theta) u + theta A(u)`.
    pub damping: f64,
    /// Sup norm treated as divergence.
    pub divergence: f64,
    /// `(rho, rho0)` for the bound check on nonzero outcomes.
    pub radii: Option<(Vec<f64>, f64)>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 500,
            damping: 0.5,
            divergence: 1e6,
            radii: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Zero,
    Nonzero,
    NotConverged,
    Diverged,
}

/// Check of a nonzero outcome against `||u||_C1 >= rho0`, `||u_k|| <= rho_k`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundCheck {
    pub c1_norm: f64,
    pub rho0: f64,
    pub sup_norms: Vec<f64>,
    pub rho: Vec<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointResult<T: Real> {
    #[serde(skip)]
    pub fields: Vec<ScalarField<T>>,
    pub iterations: usize,
    /// C1-type norm of the last update.
    pub update_norm: f64,
    pub residual: Residual,
    pub classification: Classification,
    pub sup_norm: f64,
    pub c1_norm: f64,
    /// Smallest field value over all iterates (cone check).
    pub min_value: f64,
    pub history: Vec<f64>,
    pub bound_check: Option<BoundCheck>,
}

impl<T: Real> FixedPointResult<T> {
    pub fn converged(&self) -> bool {
        matches!(self.classification, Classification::Zero | Classification::Nonzero)
    }
}

fn min_value<T: Real>(u: &[ScalarField<T>]) -> f64 {
    u.iter().map(|f| f.min().as_f64()).fold(f64::INFINITY, f64::min)
}

/// Damped Picard iteration `u <- (1 - theta) u + theta A(u)`.
pub fn fixed_point_iterate<T: Real>(sys: &System<T>, u0: Vec<ScalarField<T>>, opts: &SolveOptions) -> Result<FixedPointResult<T>, SolverError> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(SolverError::Invalid(format!("damping {} outside (0, 1]", opts.damping)));
    }
    check_fields(sys, &u0)?;
    let theta = T::lit(opts.damping);
    let keep = T::one() - theta;
    let mut u = u0;
    let mut history = Vec::new();
    let mut update = f64::INFINITY;
    let mut lowest = min_value(&u);
    let mut status = Classification::NotConverged;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        let a = apply_a(sys, &u)?;
        let next: Vec<ScalarField<T>> = u
            .iter()
            .zip(&a)
            .map(|(old, new)| ScalarField::new(old.values.iter().zip(&new.values).map(|(&o, &v)| keep * o + theta * v).collect(), old.interior().len()))
            .collect();
        let diff: Vec<ScalarField<T>> = u
            .iter()
            .zip(&next)
            .map(|(o, v)| ScalarField::new(o.values.iter().zip(&v.values).map(|(&p, &q)| q - p).collect(), o.interior().len()))
            .collect();
        update = c1_norm(sys, &diff);
        history.push(update);
        u = next;
        iterations = it;
        lowest = lowest.min(min_value(&u));
        let s = sup_norm(&u);
        if !s.is_finite() || s > opts.divergence {
            status = Classification::Diverged;
            break;
        }
        if update < opts.tol {
            status = if s > 10.0 * opts.tol { Classification::Nonzero } else { Classification::Zero };
            break;
        }
    }
    let residual = residual(sys, &u)?;
    let sup = sup_norm(&u);
    let c1 = c1_norm(sys, &u);
    let bound_check = match (&opts.radii, status) {
        (Some((rho, rho0)), Classification::Nonzero) => {
            let sup_norms: Vec<f64> = u.iter().map(|f| f.sup_norm().as_f64()).collect();
            let holds = c1 >= *rho0 && sup_norms.iter().zip(rho).all(|(s, r)| s <= r);
            Some(BoundCheck {
                c1_norm: c1,
                rho0: *rho0,
                sup_norms,
                rho: rho.clone(),
                holds,
            })
        }
        _ => None,
    };
    Ok(FixedPointResult {
        fields: u,
        iterations,
        update_norm: update,
        residual,
        classification: status,
        sup_norm: sup,
        c1_norm: c1,
        min_value: lowest,
        history,
        bound_check,
    })
}
