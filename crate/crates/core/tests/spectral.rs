use std::f64::consts::PI;
use std::sync::Arc;

use ellipcert::green::GreenSystem;
use ellipcert::mesh::{DiscreteDomain, DomainSpec};
use ellipcert::operator::{constant, OperatorSpec};
use ellipcert::spectral::principal_eigenpair;

fn interval(h: f64, d: f64) -> GreenSystem<f64> {
    let dom = Arc::new(DiscreteDomain::new(&DomainSpec::interval(0.0, 1.0, h)).unwrap());
    let mut spec = OperatorSpec::laplacian(1);
    if d != 0.0 {
        spec = spec.with_d(constant(d));
    }
    GreenSystem::new(dom, &spec).unwrap()
}

#[test]
fn interval_radius_and_shift() {
    let e0 = principal_eigenpair(&interval(1.0 / 200.0, 0.0), 1e-12, 10_000).unwrap();
    assert!((e0.r * PI * PI - 1.0).abs() < 1e-4, "{}", e0.r);
    let e1 = principal_eigenpair(&interval(1.0 / 200.0, 1.0), 1e-12, 10_000).unwrap();
    assert!((e1.r * (PI * PI + 1.0) - 1.0).abs() < 1e-4, "{}", e1.r);
    assert!(e1.r < e0.r);
}

#[test]
fn eigenfunction_on_interval_is_a_sine() {
    let gs = interval(1.0 / 100.0, 0.0);
    let e = principal_eigenpair(&gs, 1e-12, 10_000).unwrap();
    let dom = gs.domain();
    let err = (0..dom.n_nodes()).map(|i| (e.phi.values[i] - (PI * dom.coord(i)[0]).sin()).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn ball_eigenpair_is_positive_and_resolved() {
    let dom = Arc::new(DiscreteDomain::new(&DomainSpec::ball(3, 1.0, 1.0 / 8.0)).unwrap());
    let gs = GreenSystem::new(dom, &OperatorSpec::laplacian(3)).unwrap();
    let tol: f64 = 1e-8;
    let e = principal_eigenpair::<f64>(&gs, tol, 10_000).unwrap();
    assert!(e.r > 0.0);
    assert!(e.phi.min() >= -1e-8);
    assert!(e.residual < tol * e.phi.sup_norm());
    assert!((e.mu * e.r - 1.0).abs() < 1e-15);
    let g = gs.green_apply(e.phi.interior()).unwrap();
    let res = g.values.iter().zip(&e.phi.values).map(|(a, b)| (a - e.r * b).abs()).fold(0.0, f64::max);
    assert!(res < tol);
}

#[test]
fn larger_zero_order_term_lowers_radius_on_ball() {
    let dom = Arc::new(DiscreteDomain::new(&DomainSpec::ball(2, 1.0, 1.0 / 16.0)).unwrap());
    let g0 = GreenSystem::new(dom.clone(), &OperatorSpec::laplacian(2)).unwrap();
    let g1 = GreenSystem::new(dom, &OperatorSpec::laplacian(2).with_d(Arc::new(|x: &[f64]| 1.0 + x[0] * x[0]))).unwrap();
    let r0 = principal_eigenpair(&g0, 1e-9, 10_000).unwrap().r;
    let r1 = principal_eigenpair(&g1, 1e-9, 10_000).unwrap().r;
    assert!(r1 < r0);
}
