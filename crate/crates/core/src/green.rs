//! Dirichlet solves, the Green operator, Green's function columns and the
//! scalar constants built from them.
//!
//! The assembled relation is `K_I u_I + K_B u_B = h^n f` (see
//! [`crate::operator`]). A Green column `g(.;x)` is `K_I^{-T} e_x`, which
//! makes `G(f)(x) = sum_y g(y;x) f(y) w_y` hold exactly for interior weights
//! `w_y = h^n`.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::mesh::{dist2, DiscreteDomain, ScalarField};
use crate::operator::{assemble, verify_assumptions, AssumptionTolerances, OperatorError, OperatorSpec};
use crate::scalar::Real;
use crate::sparse::{FactorError, Factorization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{source}; failing assumptions: {failing}")]
    Singular { source: FactorError, failing: String },
    #[error("node {0} is not an interior node")]
    NotInterior(usize),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

/// Factorized Dirichlet problem for one operator on one domain.
#[derive(Debug)]
pub struct GreenSystem<T: Real> {
    dom: Arc<DiscreteDomain<T>>,
    op: crate::operator::DiscreteOperator<T>,
    fact: Factorization<T>,
}

/// Right-hand sides solved per factorization call.
const BATCH: usize = 64;

impl<T: Real> GreenSystem<T> {
    pub fn new(dom: Arc<DiscreteDomain<T>>, spec: &OperatorSpec<T>) -> Result<Self, GreenError> {
        let op = assemble(spec, &dom)?;
        let fact = Factorization::new(&op.k_int, op.symmetric).map_err(|source| {
            let rep = verify_assumptions(spec, &dom, AssumptionTolerances::default());
            let failing: Vec<String> = rep
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{} ({})", c.name, c.detail))
                .collect();
            GreenError::Singular {
                source,
                failing: if failing.is_empty() {
                    "none".into()
                } else {
                    failing.join(", ")
                },
            }
        })?;
        Ok(GreenSystem { dom, op, fact })
    }

    pub fn domain(&self) -> &DiscreteDomain<T> {
        &self.dom
    }

    pub fn domain_arc(&self) -> Arc<DiscreteDomain<T>> {
        self.dom.clone()
    }

    pub fn operator(&self) -> &crate::operator::DiscreteOperator<T> {
        &self.op
    }

    pub fn uses_cholesky(&self) -> bool {
        self.fact.is_cholesky()
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<(), GreenError> {
        if got < expected {
            return Err(GreenError::Length { expected, got });
        }
        Ok(())
    }

    /// Solves `L_h u = f` in the interior with `u = g` on the boundary.
    /// `f` may hold interior values only or values on all nodes.
    pub fn solve_poisson(&self, f: &[T], g_boundary: &[T]) -> Result<ScalarField<T>, GreenError> {
        let n_int = self.dom.n_interior();
        self.check_len(f.len(), n_int)?;
        if g_boundary.len() != self.dom.n_boundary() {
            return Err(GreenError::Length {
                expected: self.dom.n_boundary(),
                got: g_boundary.len(),
            });
        }
        let kb = self.op.k_bnd.mul_vec(g_boundary);
        let rhs: Vec<T> = (0..n_int).map(|i| self.op.scale * f[i] - kb[i]).collect();
        let mut values = self.fact.solve(&rhs);
        values.extend_from_slice(g_boundary);
        Ok(ScalarField::new(values, n_int))
    }

    /// The Green operator `G(f)`: zero boundary data.
    pub fn green_apply(&self, f: &[T]) -> Result<ScalarField<T>, GreenError> {
        Ok(self.green_apply_many(&[f])?.pop().expect("one column"))
    }

    pub fn green_apply_many(&self, fs: &[&[T]]) -> Result<Vec<ScalarField<T>>, GreenError> {
        let n_int = self.dom.n_interior();
        let mut cols = Vec::with_capacity(fs.len());
        for f in fs {
            self.check_len(f.len(), n_int)?;
            cols.push(f[..n_int].iter().map(|&v| v * self.op.scale).collect::<Vec<T>>());
        }
        for chunk in cols.chunks_mut(BATCH) {
            self.fact.solve_many(chunk);
        }
        Ok(cols.into_iter().map(|c| self.pad(c)).collect())
    }

    /// Solution of `L_h u = 0` with `u = zeta` on the boundary.
    pub fn harmonic_extension(&self, zeta: &[T]) -> Result<ScalarField<T>, GreenError> {
        let zeros = vec![T::zero(); self.dom.n_interior()];
        self.solve_poisson(&zeros, zeta)
    }

    fn pad(&self, mut v: Vec<T>) -> ScalarField<T> {
        let n_int = self.dom.n_interior();
        v.resize(self.dom.n_nodes(), T::zero());
        ScalarField::new(v, n_int)
    }

    /// `g(.;x)` for an interior source node `x`, zero on the boundary.
    pub fn green_column(&self, x: usize) -> Result<ScalarField<T>, GreenError> {
        Ok(self.green_columns(&[x])?.pop().expect("one column"))
    }

    pub fn green_columns(&self, xs: &[usize]) -> Result<Vec<ScalarField<T>>, GreenError> {
        let n_int = self.dom.n_interior();
        let mut cols = Vec::with_capacity(xs.len());
        for &x in xs {
            if x >= n_int {
                return Err(GreenError::NotInterior(x));
            }
            let mut e = vec![T::zero(); n_int];
            e[x] = T::one();
            cols.push(e);
        }
        for chunk in cols.chunks_mut(BATCH) {
            self.fact.solve_transpose_many(chunk);
        }
        Ok(cols.into_iter().map(|c| self.pad(c)).collect())
    }

    /// `d/dx_l g(.;x)` for the listed `(x, l)` pairs, obtained by applying the
    /// gradient stencil of `x` to neighbouring source columns. Sources on the
    /// boundary contribute zero columns.
    pub fn green_x_derivatives(&self, pairs: &[(usize, usize)]) -> Result<Vec<ScalarField<T>>, GreenError> {
        let n_int = self.dom.n_interior();
        let mut cols = Vec::with_capacity(pairs.len());
        for &(x, l) in pairs {
            if x >= n_int {
                return Err(GreenError::NotInterior(x));
            }
            let mut e = vec![T::zero(); n_int];
            let (ix, w) = self.dom.gradient_stencil(x, l);
            for (&j, &wj) in ix.iter().zip(w) {
                if j < n_int {
                    e[j] += wj;
                }
            }
            cols.push(e);
        }
        for chunk in cols.chunks_mut(BATCH) {
            self.fact.solve_transpose_many(chunk);
        }
        Ok(cols.into_iter().map(|c| self.pad(c)).collect())
    }

    /// Interior nodes used as source samples for sup estimates: all of them
    /// up to `full_limit`, otherwise `samples` farthest points.
    pub fn source_samples(&self, full_limit: usize, samples: usize) -> Vec<usize> {
        if self.dom.n_interior() <= full_limit {
            (0..self.dom.n_interior()).collect()
        } else {
            self.dom.farthest_point_samples(samples)
        }
    }
}

/// Sampling controls for [`green_constants`].
#[derive(Clone, Copy, Debug)]
pub struct ConstantOptions {
    pub full_sweep_limit: usize,
    pub samples: usize,
}

impl Default for ConstantOptions {
    fn default() -> Self {
        ConstantOptions {
            full_sweep_limit: 10_000,
            samples: 512,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GreenConstants<T: Real> {
    /// `||G(1)||_inf`.
    pub sup_norm_g1: T,
    /// `G_l = sup_x int |d/dx_l g(y;x)| dy`, one per axis.
    pub deriv_constants: Vec<T>,
    /// Source node attaining each `G_l`.
    pub deriv_argmax: Vec<usize>,
    /// `||gamma||_inf` for the supplied boundary data.
    pub gamma_sup: T,
    /// `||d/dx_l gamma||_inf`, one per axis.
    pub gamma_grad_sup: Vec<T>,
    /// Number of source nodes swept for `G_l`.
    pub sources: usize,
    /// True when every interior node was swept.
    pub exhaustive: bool,
}

/// Computes the Green constants; `zeta` is the boundary data for `gamma`.
pub fn green_constants<T: Real>(
    gs: &GreenSystem<T>,
    zeta: &[T],
    opts: ConstantOptions,
) -> Result<GreenConstants<T>, GreenError> {
    let dom = gs.domain();
    let n = dom.dim();
    let n_int = dom.n_interior();
    let ones = vec![T::one(); n_int];
    let g1 = gs.green_apply(&ones)?;
    let sup_norm_g1 = g1.sup_norm();

    let xs = gs.source_samples(opts.full_sweep_limit, opts.samples);
    let weights = &dom.volume_weights()[..n_int];
    let mut best = vec![T::zero(); n];
    let mut arg = vec![0usize; n];
    for chunk in xs.chunks(BATCH / n.max(1)) {
        let pairs: Vec<(usize, usize)> = chunk
            .iter()
            .flat_map(|&x| (0..n).map(move |l| (x, l)))
            .collect();
        let cols = gs.green_x_derivatives(&pairs)?;
        for ((x, l), col) in pairs.iter().zip(&cols) {
            let s = col.values[..n_int]
                .iter()
                .zip(weights)
                .fold(T::zero(), |acc, (&g, &w)| acc + g.abs() * w);
            if s > best[*l] {
                best[*l] = s;
                arg[*l] = *x;
            }
        }
    }

    let gamma = gs.harmonic_extension(zeta)?;
    let grad = dom.gradient(&gamma);
    Ok(GreenConstants {
        sup_norm_g1,
        deriv_constants: best,
        deriv_argmax: arg,
        gamma_sup: gamma.sup_norm(),
        gamma_grad_sup: (0..n).map(|l| grad.component_sup(l)).collect(),
        sources: xs.len(),
        exhaustive: xs.len() == n_int,
    })
}

/// Per-source check of the integral estimates derived from the pointwise
/// Green bounds.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IntegralCheck {
    pub source: usize,
    pub x: Vec<f64>,
    /// `int g(y;x) dy`.
    pub mass: f64,
    /// `c0 * n * omega_n * rho^2 / 2`.
    pub mass_bound: f64,
    /// `max_l int |d/dx_l g(y;x)| dy`.
    pub deriv_mass: f64,
    /// `c1 * n * omega_n * rho`.
    pub deriv_bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GreenBoundsReport {
    /// Smallest `c0` with `g(y;x) <= c0 |x-y|^(2-n)` on sampled off-diagonal pairs.
    pub c0: f64,
    /// Smallest `c1` with `|grad g| <= c1 |x-y|^(1-n)` (both variables).
    pub c1: f64,
    pub c1_from_x: f64,
    pub c1_from_y: f64,
    /// `min g` over all sampled columns.
    pub min_g: f64,
    pub max_g: f64,
    /// `max |g(y;x) - g(x;y)|` over sampled sources, present when `b == c`.
    pub symmetry_defect: Option<f64>,
    pub exclusion_radius: f64,
    pub pairs: usize,
    pub sources: usize,
    pub integral_checks: Vec<IntegralCheck>,
    pub integral_estimates_hold: bool,
}

/// Fits `c0`, `c1` from sampled Green columns (pairs further apart than
/// `exclusion` cells) and checks the integral estimates for each source.
pub fn validate_bounds<T: Real>(
    gs: &GreenSystem<T>,
    sources: usize,
    exclusion: f64,
) -> Result<GreenBoundsReport, GreenError> {
    let dom = gs.domain();
    let n = dom.dim();
    let n_int = dom.n_interior();
    let xs = dom.farthest_point_samples(sources);
    let r_ex = exclusion * dom.h().as_f64();
    let r_ex2 = r_ex * r_ex;
    let cols = gs.green_columns(&xs)?;
    let pairs_x: Vec<(usize, usize)> = xs.iter().flat_map(|&x| (0..n).map(move |l| (x, l))).collect();
    let dcols = gs.green_x_derivatives(&pairs_x)?;
    let weights = &dom.volume_weights()[..n_int];
    let np = n as i32;

    let (mut c0, mut c1x, mut c1y) = (0.0f64, 0.0f64, 0.0f64);
    let (mut min_g, mut max_g) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut pairs = 0usize;
    let mut per_source = Vec::with_capacity(xs.len());
    for (s, &x) in xs.iter().enumerate() {
        let col = &cols[s];
        let gy = dom.gradient(col);
        let px = dom.coord(x);
        let mass: f64 = col.values[..n_int]
            .iter()
            .zip(weights)
            .map(|(&g, &w)| (g * w).as_f64())
            .sum();
        let dmass = (0..n)
            .map(|l| {
                dcols[s * n + l].values[..n_int]
                    .iter()
                    .zip(weights)
                    .map(|(&g, &w)| (g.abs() * w).as_f64())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        per_source.push((x, px.iter().map(|v| v.as_f64()).collect::<Vec<_>>(), mass, dmass));
        for y in 0..dom.n_nodes() {
            let g = col.values[y].as_f64();
            min_g = min_g.min(g);
            max_g = max_g.max(g);
            let r2 = dist2(px, dom.coord(y)).as_f64();
            if r2 <= r_ex2 {
                continue;
            }
            let r = r2.sqrt();
            pairs += 1;
            c0 = c0.max(g * r.powi(np - 2));
            let gxn = (0..n)
                .map(|l| dcols[s * n + l].values[y].as_f64().powi(2))
                .sum::<f64>()
                .sqrt();
            let gyn = gy.at(y).iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
            c1x = c1x.max(gxn * r.powi(np - 1));
            c1y = c1y.max(gyn * r.powi(np - 1));
        }
    }
    let c1 = c1x.max(c1y);

    let symmetry_defect = if gs.operator().symmetric {
        let mut d = 0.0f64;
        for (a, &xa) in xs.iter().enumerate() {
            for (b, &xb) in xs.iter().enumerate() {
                d = d.max((cols[a].values[xb] - cols[b].values[xa]).abs().as_f64());
            }
        }
        Some(d)
    } else {
        None
    };

    let rho = dom.diameter().as_f64();
    let omega = dom.omega_n().as_f64();
    let mass_bound = c0 * n as f64 * omega * rho * rho / 2.0;
    let deriv_bound = c1 * n as f64 * omega * rho;
    let integral_checks: Vec<IntegralCheck> = per_source
        .into_iter()
        .map(|(source, x, mass, deriv_mass)| IntegralCheck {
            source,
            x,
            mass,
            mass_bound,
            deriv_mass,
            deriv_bound,
            pass: mass <= mass_bound && deriv_mass <= deriv_bound,
        })
        .collect();
    let integral_estimates_hold = integral_checks.iter().all(|c| c.pass);
    Ok(GreenBoundsReport {
        c0,
        c1,
        c1_from_x: c1x,
        c1_from_y: c1y,
        min_g,
        max_g,
        symmetry_defect,
        exclusion_radius: r_ex,
        pairs,
        sources: xs.len(),
        integral_checks,
        integral_estimates_hold,
    })
}
