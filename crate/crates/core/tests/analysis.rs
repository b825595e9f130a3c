mod common;

use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use common::{ball, equation, example41, example42, exp_crossing, rho41};
use ellipcert::analysis::{
    check_existence, check_lower_bound, check_nonexistence, compute_constants, compute_hk, compute_mk, compute_tau, compute_xi, find_rho0, scan_region,
    AnalysisOptions, BoundMode, EquationConstants, ExistencePrep, Geometry, NonexistencePrep, Radii, Range, ScanGrid, SearchOptions,
};
use ellipcert::expr::{parse_expr, parse_functional, Dims};
use ellipcert::solver::{System, SystemSpec};
use proptest::prelude::*;

const D: Dims = Dims { n: 3, m: 2 };
const H: f64 = 1.0 / 8.0;

struct Case {
    spec: SystemSpec<f64>,
    radii: Radii,
    consts: Vec<EquationConstants>,
}

fn case(spec: SystemSpec<f64>, rho: Vec<f64>) -> Case {
    let sys = System::build(spec.clone()).unwrap();
    let consts = compute_constants(&sys, &AnalysisOptions::default()).unwrap();
    Case { spec, radii: Radii::new(rho), consts }
}

fn ex41() -> &'static Case {
    static C: OnceLock<Case> = OnceLock::new();
    C.get_or_init(|| case(example41(ball(H)), vec![rho41(); 2]))
}

fn ex42() -> &'static Case {
    static C: OnceLock<Case> = OnceLock::new();
    C.get_or_init(|| case(example42(ball(H)), vec![1.0; 2]))
}

fn geom() -> Geometry {
    Geometry::of(&*ball(H))
}

fn search() -> SearchOptions {
    SearchOptions::default()
}

#[test]
fn maxima_of_example_nonlinearities() {
    let g = geom();
    let rho = rho41();
    let f2 = parse_expr("(16 - z2^2) * cos(dot(1, 2))", D).unwrap();
    let m2 = compute_mk(&f2, &[rho, rho], &g, &search()).unwrap();
    assert_eq!(m2.value, 16.0);
    assert!(m2.upper >= m2.value);

    let f1 = parse_expr("exp(z1) * (1 + norm(2)^2)", D).unwrap();
    let m1 = compute_mk(&f1, &[rho, rho], &g, &search()).unwrap();
    let oracle = rho.exp() * (1.0 + PI / 6.0);
    assert!((m1.value / oracle - 1.0).abs() < 0.01, "{} vs {oracle}", m1.value);
    assert!(m1.upper >= oracle * (1.0 - 1e-12));

    let c = parse_expr("7", D).unwrap();
    assert_eq!(compute_mk(&c, &[1.0, 1.0], &g, &search()).unwrap().value, 7.0);
}

#[test]
fn sampled_max_gap_shrinks_with_refinement() {
    let g = geom();
    let f = parse_expr("sin(3*z1) * cos(w[2][1]) + x1*z2", D).unwrap();
    // Nested full grids: every coarse node is a fine node.
    let grid = |k: usize| SearchOptions {
        grid: k,
        rounds: 0,
        ..search()
    };
    let a = compute_mk(&f, &[1.0, 1.0], &g, &grid(3)).unwrap();
    let b = compute_mk(&f, &[1.0, 1.0], &g, &grid(9)).unwrap();
    assert!(a.value <= a.upper && b.value <= b.upper);
    assert!(b.gap <= a.gap + 1e-12, "{} vs {}", b.gap, a.gap);
}

#[test]
fn functional_bounds_of_example_41() {
    let dom = ball(H);
    let g = geom();
    let rho = rho41();
    let h1 = parse_functional("pointval(z1,(0,0,0)) + pointval(z2,(0,0,0))", D).unwrap();
    let b1 = compute_hk(&h1, &[rho, rho], &dom, &g).unwrap();
    assert_eq!(b1.mode, BoundMode::Monotone);
    assert!((b1.value - 2.0 * rho).abs() < 1e-6);

    let h2 = parse_functional("intbnd(z1^2 * (1 - norm(2)^2))", D).unwrap();
    let b2 = compute_hk(&h2, &[rho, rho], &dom, &g).unwrap();
    assert_eq!(b2.mode, BoundMode::Monotone);
    assert!((b2.value - 2.0 * PI * PI / 3.0).abs() < 1e-6, "{}", b2.value);

    let h = parse_functional("pointval(z1,(0.1,0.2,0.3))", D).unwrap();
    let b = compute_hk(&h, &[0.7, 2.0], &dom, &g).unwrap();
    assert!((b.value - 0.7).abs() < 1e-9);
}

#[test]
fn lower_growth_checks() {
    let g = geom();
    let d1 = Dims { n: 3, m: 1 };
    let z1 = parse_expr("z1", d1).unwrap();
    for r0 in [0.1, 0.5, 0.9] {
        assert!(check_lower_bound(&z1, 0, 1.0, r0, 1, &g, &search()).unwrap().pass);
    }
    let sq = parse_expr("z1^2", d1).unwrap();
    assert!(!check_lower_bound(&sq, 0, 1.0, 0.5, 1, &g, &search()).unwrap().pass);
}

#[test]
fn rho0_for_example_41() {
    let g = geom();
    let f1 = parse_expr("exp(z1) * (1 + norm(2)^2)", D).unwrap();
    let delta = PI * PI / 0.05;
    let r0 = find_rho0(&f1, 0, delta, 2, rho41(), &g);
    let oracle = exp_crossing(delta);
    assert!((r0 / oracle - 1.0).abs() < 1e-6, "{r0} vs {oracle}");
    assert!((r0 - 0.00509).abs() < 5e-5);
}

#[test]
fn growth_tolerance_does_not_admit_vanishing_rho0() {
    let g = geom();
    let f = parse_expr("sin(z2) * (z1^3 + abs(dot(1, 2)))", D).unwrap();
    assert_eq!(find_rho0(&f, 1, 50.0, 2, 1.0, &g), 0.0);
}

#[test]
fn existence_example_41() {
    let c = ex41();
    let rep = check_existence(&c.spec, &c.radii, &c.consts, &search()).unwrap();
    assert!(rep.verdict, "{:?}", rep.inequalities);
    assert_eq!(rep.k0, 1);
    assert!(rep.delta * 0.05 >= rep.mu_k0);
    assert!(rep.inequalities.iter().all(|i| i.recheck() == i.pass));

    let mut lam = c.spec.lambdas();
    lam[0] *= 100.0;
    let big = check_existence(&c.spec.with_params(&lam, &c.spec.etas()), &c.radii, &c.consts, &search()).unwrap();
    assert!(!big.verdict);
    assert!(!big.inequality("c3.k1.l1").unwrap().pass || !big.inequality("c2.k1").unwrap().pass);

    let zero = check_existence(&c.spec.with_params(&[0.0, 0.0], &[0.0, 0.0]), &c.radii, &c.consts, &search()).unwrap();
    assert!(!zero.verdict);
    assert!(!zero.inequality("c1").unwrap().pass);
}

#[test]
fn nonexistence_example_42() {
    let c = ex42();
    let g = geom();
    let s = search();
    let f1 = &c.spec.equations[0].f;
    let f2 = &c.spec.equations[1].f;
    let t1 = compute_tau(f1, 0, &[1.0, 1.0], &g, &s).unwrap();
    let t2 = compute_tau(f2, 1, &[1.0, 1.0], &g, &s).unwrap();
    // sup of z1 (1 - e^{-|w2|}) over the unit cone box.
    let tau1 = 1.0 - 1.0 / E;
    assert!(t1.certified >= tau1 && t1.certified < tau1 * 1.001, "{t1:?}");
    assert!(t1.sampled <= t1.certified);
    // sin(z2)/z2 (z1^3 + |<w1,w2>|) <= 1 * (1 + 3).
    assert!((t2.certified / 4.0 - 1.0).abs() < 0.001, "{t2:?}");

    let dom = &c.spec.dom;
    let x1 = compute_xi(&c.spec.equations[0].h, &[1.0, 1.0], dom, &g).unwrap();
    let x2 = compute_xi(&c.spec.equations[1].h, &[1.0, 1.0], dom, &g).unwrap();
    let vol = dom.measure();
    assert!(x1.certified >= vol && x1.certified < vol * 1.01, "{x1:?} vs {vol}");
    assert!(x2.certified >= 1.0 && x2.certified < 1.01, "{x2:?}");

    let rep = check_nonexistence(&c.spec, &c.radii, &c.consts, &s).unwrap();
    assert!(rep.verdict, "{:?}", rep.inequalities);
    assert!(rep.inequalities.iter().all(|i| i.recheck() == i.pass));
    assert!(rep.equations.iter().all(|e| e.lhs < 1.0));
}

#[test]
fn linear_growth_beyond_one_fails_nonexistence() {
    let dom = ball(H);
    let d1 = Dims { n: 3, m: 1 };
    let spec = SystemSpec {
        dom,
        equations: vec![equation(d1, "2*z1", "intdom(z1)", 3.0, 0.0)],
    };
    let c = case(spec, vec![1.0]);
    let rep = check_nonexistence(&c.spec, &c.radii, &c.consts, &search()).unwrap();
    let lhs = rep.equations[0].lhs;
    assert!((lhs - 6.0 * c.consts[0].g1_sup).abs() < 1e-9 * lhs);
    assert!(!rep.verdict);
}

#[test]
fn gradient_functionals_are_not_certifiable_for_nonexistence() {
    let dom = ball(H);
    let h = parse_functional("intbnd(z1^2 * (1 - norm(2)^2))", D).unwrap();
    let x = compute_xi(&h, &[1.0, 1.0], &dom, &geom()).unwrap();
    assert!(x.certified.is_infinite());
    assert!(x.note.unwrap().contains("not certifiable"));
}

#[test]
fn scan_boundary_is_the_linear_inequality() {
    let c = ex42();
    let s = search();
    let ex = ExistencePrep::new(&c.spec, &c.radii, &c.consts, &s).unwrap();
    let ne = NonexistencePrep::new(&c.spec, &c.radii, &c.consts, &s).unwrap();
    let grid = ScanGrid {
        k: 0,
        lambda: Range { lo: 0.0, hi: 2.0, n: 5 },
        eta: Range { lo: 0.0, hi: 0.5, n: 6 },
    };
    let rows = scan_region(&ex, &ne, &c.spec.lambdas(), &c.spec.etas(), &grid, 2).unwrap();
    assert_eq!(rows.len(), 30);
    let (tau, xi, g1) = (ne.tau[0].certified, ne.xi[0].certified, c.consts[0].g1_sup);
    let other = ne.evaluate(&c.spec.lambdas(), &c.spec.etas());
    let k2 = other.inequality("c.k2").unwrap().pass;
    for r in &rows {
        let line = r.lambda * tau * g1 + r.eta * xi < 1.0;
        assert_eq!(r.nonexistence, line && k2, "{r:?}");
        assert!(!(r.existence && r.nonexistence), "{r:?}");
    }
    let empty = ScanGrid {
        k: 0,
        lambda: Range { lo: 0.0, hi: 1.0, n: 0 },
        eta: Range { lo: 0.0, hi: 1.0, n: 3 },
    };
    assert!(scan_region(&ex, &ne, &c.spec.lambdas(), &c.spec.etas(), &empty, 1).unwrap().is_empty());
}

#[test]
fn verdicts_are_disjoint_on_example_41_scan() {
    let c = ex41();
    let s = search();
    let ex = ExistencePrep::new(&c.spec, &c.radii, &c.consts, &s).unwrap();
    let ne = NonexistencePrep::new(&c.spec, &c.radii, &c.consts, &s).unwrap();
    let grid = ScanGrid {
        k: 1,
        lambda: Range { lo: 0.0, hi: 0.02, n: 5 },
        eta: Range { lo: 0.0, hi: 0.05, n: 5 },
    };
    let rows = scan_region(&ex, &ne, &c.spec.lambdas(), &c.spec.etas(), &grid, 1).unwrap();
    assert!(rows.iter().any(|r| r.existence));
    assert!(rows.iter().all(|r| !(r.existence && r.nonexistence)));
}

#[test]
fn radii_are_validated() {
    assert!(Radii::new(vec![1.0, -1.0]).validate(2).is_err());
    assert!(Radii::new(vec![1.0]).validate(2).is_err());
    let mut r = Radii::new(vec![1.0, 2.0]);
    r.rho0 = Some(1.5);
    assert!(r.validate(2).is_err());
    r.rho0 = Some(0.5);
    assert!(r.validate(2).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn existence_is_monotone_off_k0(s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let c = ex41();
        let sc = search();
        let prep = ExistencePrep::new(&c.spec, &c.radii, &c.consts, &sc).unwrap();
        let (lam, eta) = (c.spec.lambdas(), c.spec.etas());
        let base = prep.evaluate(&lam, &eta).unwrap();
        prop_assert!(base.verdict);
        let smaller = prep.evaluate(&[lam[0], lam[1] * s], &[eta[0] * t, eta[1] * s]).unwrap();
        prop_assert!(smaller.verdict, "{:?}", smaller.inequalities);
    }

    #[test]
    fn stored_inequalities_recheck(l1 in 0.0f64..2.0, e1 in 0.0f64..0.5, l2 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        for c in [ex41(), ex42()] {
            let sc = search();
            let ex = ExistencePrep::new(&c.spec, &c.radii, &c.consts, &sc).unwrap().evaluate(&[l1, l2], &[e1, e2]).unwrap();
            let ne = NonexistencePrep::new(&c.spec, &c.radii, &c.consts, &sc).unwrap().evaluate(&[l1, l2], &[e1, e2]);
            prop_assert_eq!(ex.verdict, ex.inequalities.iter().all(|i| i.recheck()));
            prop_assert_eq!(ne.verdict, ne.inequalities.iter().all(|i| i.recheck()));
            prop_assert!(!(ex.verdict && ne.verdict));
        }
    }
}
