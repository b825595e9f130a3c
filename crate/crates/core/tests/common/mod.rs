#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use ellipcert::expr::{parse_expr, parse_functional, Dims, Expr};
use ellipcert::mesh::{DiscreteDomain, DomainSpec};
use ellipcert::operator::OperatorSpec;
use ellipcert::solver::{Equation, SystemSpec};

pub fn ball(h: f64) -> Arc<DiscreteDomain<f64>> {
    Arc::new(DiscreteDomain::new(&DomainSpec::ball(3, 1.0, h)).unwrap())
}

/// `-Lap u_k = lambda f`, `u_k = eta h[u]` (`zeta = 1`).
pub fn equation(dims: Dims, f: &str, h: &str, lambda: f64, eta: f64) -> Equation<f64> {
    Equation {
        operator: OperatorSpec::laplacian(dims.n),
        f: parse_expr(f, dims).unwrap(),
        h: parse_functional(h, dims).unwrap(),
        zeta: Expr::num(1.0),
        lambda,
        eta,
    }
}

pub fn rho41() -> f64 {
    (PI / 6.0).sqrt()
}

pub fn example41(dom: Arc<DiscreteDomain<f64>>) -> SystemSpec<f64> {
    let d = Dims { n: 3, m: 2 };
    SystemSpec {
        dom,
        equations: vec![
            equation(d, "exp(z1) * (1 + norm(2)^2)", "pointval(z1,(0,0,0)) + pointval(z2,(0,0,0))", 0.05, 0.1),
            equation(d, "(16 - z2^2) * cos(dot(1, 2))", "intbnd(z1^2 * (1 - norm(2)^2))", 0.005, 0.01),
        ],
    }
}

pub fn example42(dom: Arc<DiscreteDomain<f64>>) -> SystemSpec<f64> {
    let d = Dims { n: 3, m: 2 };
    SystemSpec {
        dom,
        equations: vec![
            equation(d, "z1^2 * (1 - exp(-norm(2)))", "intdom(z2^2)", 0.5, 0.1),
            equation(d, "sin(z2) * (z1^3 + abs(dot(1, 2)))", "maxbnd(z1)", 0.2, 0.3),
        ],
    }
}

/// Largest `r` with `delta r <= e^r` below the first crossing, by bisection.
pub fn exp_crossing(delta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta * mid <= mid.exp() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
