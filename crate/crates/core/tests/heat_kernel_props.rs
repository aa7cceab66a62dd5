#![allow(clippy::needless_range_loop)]

mod common;

use common::{
    expm_apply, generator, kernel_families, kernel_matrix, max_abs_diff, rng, weighted_random,
};
use graphblow::dynamics::functional_jt;
use graphblow::graph::{build_graph, GraphSpec};
use graphblow::heat_kernel::{
    ondiag_lower_bound_check, truncation_order, BoundVerdict, HeatKernelEvaluator, KernelMethod,
};
use graphblow::laplacian::GraphFunction;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernel_is_symmetric_positive_and_stochastic(
        n in 2usize..100,
        seed in 0u64..1000,
        t in prop::sample::select(vec![0.1, 1.0, 10.0]),
    ) {
        let g = weighted_random(n, 3.0 / n as f64, seed);
        let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
        let p = kernel_matrix(&ev, t);
        for x in 0..n {
            let mass: f64 = (0..n).map(|y| g.mu(y) * p[x][y]).sum();
            prop_assert!((mass - 1.0).abs() <= 1e-10);
            for y in 0..n {
                prop_assert!(p[x][y] > 0.0);
                prop_assert!((p[x][y] - p[y][x]).abs() <= 1e-10 * (1.0 + p[x][y]));
            }
        }
    }

    #[test]
    fn series_matches_matrix_exponential(n in 2usize..60, seed in 0u64..1000, t in 0.01f64..5.0) {
        let g = weighted_random(n, 3.0 / n as f64, seed);
        let mut r = rng(seed);
        let h: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
        let got = ev.apply_values(t, &h).unwrap();
        let want = expm_apply(&generator(&g), t, &h);
        prop_assert!(max_abs_diff(&got, &want) <= 1e-10);
    }
}

#[test]
fn two_vertex_kernel_closed_form() {
    let g = build_graph(&GraphSpec::Path(2)).unwrap();
    for method in [KernelMethod::Series, KernelMethod::Dense] {
        let ev = HeatKernelEvaluator::new(&g, method);
        for t in [0.1, 1.0, 3.0] {
            let s = ev.kernel_slice(t, 0).unwrap();
            let decay = (-2.0 * t).exp();
            assert!((s.value(0) - (1.0 + decay) / 2.0).abs() < 1e-13);
            assert!((s.value(1) - (1.0 - decay) / 2.0).abs() < 1e-13);
        }
    }
}

#[test]
fn constants_are_preserved() {
    for (name, g) in kernel_families() {
        let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
        let c = GraphFunction::constant(&g, 2.5);
        let out = ev.semigroup_apply(1.0, &c).unwrap();
        assert!(
            out.values().iter().all(|v| (v - 2.5).abs() < 1e-10),
            "{name}"
        );
    }
}

#[test]
fn non_positive_times_are_rejected() {
    let g = weighted_random(30, 0.1, 3);
    let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
    let h: Vec<f64> = (0..30).map(|x| x as f64).collect();
    assert!(ev.apply_values(0.0, &h).is_err());
    assert!(ev.apply_values(-1.0, &h).is_err());
}

#[test]
fn truncation_order_meets_tail_bound() {
    for &(x, tol) in &[(0.5, 1e-12), (1.0, 1e-12), (0.1, 1e-6), (1.0, 1e-15)] {
        let k = truncation_order(x, 1.0, tol);
        let mut term = 1.0;
        let mut tail = 0.0;
        for j in 1..200 {
            term *= x / j as f64;
            if j > k {
                tail += term;
            }
        }
        assert!(tail <= tol, "x={x} K={k} tail={tail:e}");
    }
}

#[test]
fn adjointness_on_path() {
    let g = build_graph(&GraphSpec::Path(10)).unwrap();
    let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
    let mut r = rng(8);
    for _ in 0..10 {
        let h = GraphFunction::on_vertices((0..10).map(|_| r.random_range(-1.0..1.0)).collect());
        let x = r.random_range(0..10);
        assert!(ev.check_adjointness(0.5, &h, x).unwrap() <= 1e-12);
    }
}

#[test]
fn on_diagonal_bound_on_long_line() {
    let g = build_graph(&GraphSpec::Lattice { dim: 1, side: 4001 }).unwrap();
    let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
    let c0 = 2.0 * g.d_mu() * std::f64::consts::E + 0.1;
    let t = 20.0;
    let rep = ondiag_lower_bound_check(&ev, None, 2000, t, c0).unwrap();
    let radius = c0 * t * t.ln();
    let exact_volume = 2.0 * radius.floor() + 1.0;
    assert!((rep.bound - 1.0 / (4.0 * exact_volume)).abs() < 1e-15);
    assert_eq!(rep.verdict, BoundVerdict::Holds);
    assert!(rep.p_xx >= rep.bound);
    assert!(ondiag_lower_bound_check(&ev, None, 2000, t, 2.0).is_err());
    assert!(ondiag_lower_bound_check(&ev, None, 2000, 0.5, c0).is_err());
}

#[test]
fn kernel_weighted_functional() {
    let g = build_graph(&GraphSpec::Path(2)).unwrap();
    let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
    let state = GraphFunction::on_vertices(vec![1.0, 0.0]);
    let jt = functional_jt(&ev, 0, 1.5, 0.5, &state).unwrap();
    assert!((jt - (1.0 + (-2.0f64).exp()) / 2.0).abs() < 1e-13);

    let g = weighted_random(25, 0.1, 4);
    let ev = HeatKernelEvaluator::new(&g, KernelMethod::Series);
    let c = GraphFunction::constant(&g, 3.0);
    assert!((functional_jt(&ev, 7, 2.0, 0.0, &c).unwrap() - 3.0).abs() < 1e-10);
    assert_eq!(
        functional_jt(&ev, 7, 2.0, 1.0, &GraphFunction::zeros(&g)).unwrap(),
        0.0
    );
    assert!(functional_jt(&ev, 7, 2.0, 2.0, &c).is_err());
}
