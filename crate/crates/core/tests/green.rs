use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use ellipcert::green::{green_constants, validate_bounds, ConstantOptions, GreenSystem};
use ellipcert::mesh::{DiscreteDomain, DomainSpec, ScalarField};
use ellipcert::operator::{constant, OperatorSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ball_laplacian(h: f64) -> GreenSystem<f64> {
    let dom = Arc::new(DiscreteDomain::new(&DomainSpec::ball(3, 1.0, h)).unwrap());
    GreenSystem::new(dom, &OperatorSpec::laplacian(3)).unwrap()
}

fn coarse() -> &'static GreenSystem<f64> {
    static GS: OnceLock<GreenSystem<f64>> = OnceLock::new();
    GS.get_or_init(|| ball_laplacian(1.0 / 8.0))
}

fn interior(gs: &GreenSystem<f64>, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..gs.domain().n_interior()).map(|_| rng.random_range(lo..hi)).collect()
}

fn sup_diff(a: &ScalarField<f64>, b: &ScalarField<f64>) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_data_gives_zero_solution() {
    let gs = coarse();
    let dom = gs.domain();
    let u = gs.solve_poisson(&vec![0.0; dom.n_interior()], &vec![0.0; dom.n_boundary()]).unwrap();
    assert!(u.values.iter().all(|&v| v == 0.0));
}

#[test]
fn solve_reproduces_right_hand_side() {
    let gs = coarse();
    let f = interior(gs, 3, -1.0, 1.0);
    let u = gs.green_apply(&f).unwrap();
    let lu = gs.operator().apply(&u.values);
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let res = lu.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(res / scale < 1e-10, "relative residual {res}");
}

#[test]
fn poisson_on_ball_matches_closed_form() {
    let gs = ball_laplacian(1.0 / 16.0);
    let dom = gs.domain();
    let u = gs.green_apply(&vec![1.0; dom.n_interior()]).unwrap();
    let err = (0..dom.n_nodes())
        .map(|i| {
            let r2: f64 = dom.coord(i).iter().map(|v| v * v).sum();
            (u.values[i] - (1.0 - r2) / 6.0).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 0.05 / 6.0, "max error {err}");
}

#[test]
fn harmonic_extension_of_coordinate_on_ball() {
    let gs = coarse();
    let dom = gs.domain();
    let zeta: Vec<f64> = (dom.n_interior()..dom.n_nodes()).map(|i| dom.coord(i)[0]).collect();
    let g = gs.harmonic_extension(&zeta).unwrap();
    let err = (0..dom.n_nodes()).map(|i| (g.values[i] - dom.coord(i)[0]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn unit_boundary_data_gives_unit_gamma() {
    let gs = coarse();
    let dom = gs.domain();
    let c = green_constants(gs, &vec![1.0; dom.n_boundary()], ConstantOptions::default()).unwrap();
    assert!((c.gamma_sup - 1.0).abs() < 1e-12);
    assert!(c.gamma_grad_sup.iter().all(|&g| g < 1e-10));
    let z = green_constants(gs, &vec![0.0; dom.n_boundary()], ConstantOptions::default()).unwrap();
    assert_eq!(z.gamma_sup, 0.0);
}

#[test]
fn columns_reproduce_green_apply() {
    let gs = coarse();
    let dom = gs.domain();
    let n_int = dom.n_interior();
    let xs: Vec<usize> = (0..n_int).step_by(7).collect();
    let cols = gs.green_columns(&xs).unwrap();
    let w = dom.volume_weights();
    for seed in 0..20 {
        let f = interior(gs, 100 + seed, -1.0, 1.0);
        let u = gs.green_apply(&f).unwrap();
        for (col, &x) in cols.iter().zip(&xs) {
            let s: f64 = (0..n_int).map(|y| col.values[y] * f[y] * w[y]).sum();
            assert!((s - u.values[x]).abs() < 1e-8, "source {x}: {s} vs {}", u.values[x]);
        }
    }
}

#[test]
fn derivative_columns_represent_gradient() {
    let gs = ball_laplacian(1.0 / 16.0);
    let dom = gs.domain();
    let n_int = dom.n_interior();
    let f: Vec<f64> = (0..n_int).map(|i| 1.0 + dom.coord(i)[0] * dom.coord(i)[1]).collect();
    let u = gs.green_apply(&f).unwrap();
    let grad = dom.gradient(&u);
    let xs = dom.farthest_point_samples(12);
    let pairs: Vec<(usize, usize)> = xs.iter().flat_map(|&x| (0..3).map(move |l| (x, l))).collect();
    let cols = gs.green_x_derivatives(&pairs).unwrap();
    let w = dom.volume_weights();
    for (col, &(x, l)) in cols.iter().zip(&pairs) {
        let s: f64 = (0..n_int).map(|y| col.values[y] * f[y] * w[y]).sum();
        assert!((s - grad.at(x)[l]).abs() < 1e-8 + 1e-2 * grad.sup_norm(), "x={x} l={l}: {s} vs {}", grad.at(x)[l]);
    }
}

#[test]
fn sup_of_green_one_converges_at_second_order() {
    let errs: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|&k| {
            let gs = ball_laplacian(1.0 / k);
            let g1 = gs.green_apply(&vec![1.0; gs.domain().n_interior()]).unwrap();
            (g1.sup_norm() - 1.0 / 6.0).abs()
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    let order = (errs[1] / errs[2]).log2();
    assert!(order > 1.8, "observed order {order} ({errs:?})");
}

#[test]
fn fitted_bounds_on_ball() {
    let gs = ball_laplacian(1.0 / 16.0);
    let rep = validate_bounds(&gs, 24, 4.0).unwrap();
    assert!(rep.min_g >= -1e-8);
    assert!(rep.symmetry_defect.unwrap() < 1e-6 * rep.max_g);
    // Closed form: g(y;x) |x-y| = (1 - |x-y| / (|x| |y - x*|)) / (4 pi), largest at x = 0
    // for pairs outside the exclusion radius r_ex, where it equals (1 - r_ex) / (4 pi).
    let oracle = (1.0 - rep.exclusion_radius) / (4.0 * PI);
    assert!((rep.c0 / oracle - 1.0).abs() < 0.10, "c0 = {} vs {oracle}", rep.c0);
    assert!(rep.integral_estimates_hold);
    let c = green_constants(&gs, &vec![1.0; gs.domain().n_boundary()], ConstantOptions::default()).unwrap();
    assert!(c.sup_norm_g1 <= rep.c0 * 3.0 * (4.0 * PI / 3.0) * 4.0 / 2.0);
}

#[test]
fn drift_operator_is_positive_but_not_symmetric() {
    let dom = Arc::new(DiscreteDomain::new(&DomainSpec::unit_box(2, 1.0 / 16.0)).unwrap());
    let spec = OperatorSpec::laplacian(2).with_b(vec![constant(1.0), constant(0.0)]);
    let gs = GreenSystem::new(dom, &spec).unwrap();
    let rep = validate_bounds(&gs, 10, 4.0).unwrap();
    assert!(rep.symmetry_defect.is_none());
    assert!(rep.min_g >= -1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linearity(s1 in 0u64..1000, s2 in 0u64..1000, a in -2.0f64..2.0) {
        let gs = coarse();
        let f1 = interior(gs, s1, -1.0, 1.0);
        let f2 = interior(gs, s2, -1.0, 1.0);
        let sum: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| a * x + y).collect();
        let (g1, g2, gs_) = (gs.green_apply(&f1).unwrap(), gs.green_apply(&f2).unwrap(), gs.green_apply(&sum).unwrap());
        let lin = ScalarField::new(g1.values.iter().zip(&g2.values).map(|(x, y)| a * x + y).collect(), g1.interior().len());
        prop_assert!(sup_diff(&lin, &gs_) < 1e-12);
    }

    #[test]
    fn cone_preservation(seed in 0u64..10_000) {
        let gs = coarse();
        let f = interior(gs, seed, 0.0, 1.0);
        let u = gs.green_apply(&f).unwrap();
        prop_assert!(u.min() >= -1e-12);
    }

    #[test]
    fn monotonicity(seed in 0u64..10_000) {
        let gs = coarse();
        let f1 = interior(gs, seed, -1.0, 1.0);
        let bump = interior(gs, seed + 1, 0.0, 0.5);
        let f2: Vec<f64> = f1.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let (u1, u2) = (gs.green_apply(&f1).unwrap(), gs.green_apply(&f2).unwrap());
        prop_assert!(u1.values.iter().zip(&u2.values).all(|(a, b)| *a <= *b + 1e-12));
    }
}
