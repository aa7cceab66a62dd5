mod common;

use common::{interior_function, random_domain, rng, weighted_random};
use graphblow::dynamics::{
    check_comparison, check_j_inequality, functional_j, integrate, Problem, SimulationConfig,
    TrajectoryRecord, Verdict,
};
use graphblow::graph::{build_graph, GraphSpec, WeightedGraph};
use graphblow::laplacian::{DomainDecomposition, GraphFunction};
use graphblow::nonlinearity::Nonlinearity;
use graphblow::spectral::first_eigenpair;
use graphblow::Error;
use proptest::prelude::*;
use rand::Rng;

fn single_vertex(a: f64) -> (WeightedGraph, SimulationConfig) {
    let g = build_graph(&GraphSpec::Path(5)).unwrap();
    let dom = DomainDecomposition::ball(&g, 2, 1.0).unwrap();
    let init = GraphFunction::on_interior(&g, &dom, &[a]).unwrap();
    let mut cfg = SimulationConfig::new(Problem::Dirichlet(dom), init);
    cfg.t_max = 50.0;
    (g, cfg)
}

fn recorded_dirichlet_run(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    init: GraphFunction,
    nl: &Nonlinearity,
    t_max: f64,
) -> TrajectoryRecord {
    let mut cfg = SimulationConfig::new(Problem::Dirichlet(dom.clone()), init);
    cfg.t_max = t_max;
    cfg.output_interval = Some(t_max / 100.0);
    cfg.record_states = true;
    cfg.steady_state = false;
    integrate(g, &cfg, nl).unwrap()
}

#[test]
fn halving_tolerance_shrinks_the_change_in_blowup_time() {
    let nl = Nonlinearity::power(1.0).unwrap();
    let estimates: Vec<f64> = [1e-6, 5e-7, 2.5e-7, 1.25e-7, 6.25e-8]
        .iter()
        .map(|&tol| {
            let (g, mut cfg) = single_vertex(3.0);
            cfg.local_tol = tol;
            let rec = integrate(&g, &cfg, &nl).unwrap();
            assert_eq!(rec.verdict, Verdict::Blowup);
            rec.t_est.unwrap()
        })
        .collect();
    let changes: Vec<f64> = estimates.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in changes.windows(2) {
        assert!(w[1] < w[0], "{estimates:?}");
    }
}

#[test]
fn truncation_radius_does_not_move_the_source_value() {
    let g = build_graph(&GraphSpec::Lattice { dim: 1, side: 401 }).unwrap();
    let nl = Nonlinearity::power(2.0).unwrap();
    let runs: Vec<Vec<(f64, f64)>> = [50.0, 100.0, 200.0]
        .iter()
        .map(|&radius| {
            let mut init = vec![0.0; g.len()];
            init[200] = 0.5;
            let mut cfg = SimulationConfig::new(
                Problem::truncated(200, radius),
                GraphFunction::on_vertices(init),
            );
            cfg.t_max = 10.0;
            cfg.output_interval = Some(0.5);
            cfg.source = Some(200);
            let rec = integrate(&g, &cfg, &nl).unwrap();
            rec.samples
                .iter()
                .map(|s| (s.t, s.u_source.unwrap()))
                .collect()
        })
        .collect();
    for pair in runs.windows(2) {
        assert_eq!(pair[0].len(), pair[1].len());
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() <= 1e-6, "t={} {} vs {}", a.0, a.1, b.1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dirichlet_runs_respect_barrier_positivity_and_jensen(
        n in 12usize..40,
        seed in 0u64..1000,
        kind in 0usize..3,
    ) {
        let g = weighted_random(n, 0.1, seed);
        let mut r = rng(seed);
        let dom = random_domain(&g, &mut r);
        let nl = match kind {
            0 => Nonlinearity::power(1.0).unwrap(),
            1 => Nonlinearity::power(0.5).unwrap(),
            _ => Nonlinearity::expm1(),
        };
        let init = interior_function(&g, &dom, |_| {
            if r.random_bool(0.3) { 0.0 } else { r.random_range(0.0..2.0) }
        });
        if init.sup_norm() == 0.0 {
            return Ok(());
        }
        let eig = first_eigenpair(&g, &dom).unwrap();
        let rec = recorded_dirichlet_run(&g, &dom, init.clone(), &nl, 1.0);
        let tol = 1e-8;
        for s in &rec.samples {
            let Some(state) = &s.state else { continue };
            if !state.iter().all(|v| v.is_finite()) {
                continue;
            }
            for &x in dom.interior() {
                prop_assert!(state[x] >= -10.0 * tol);
                let a = init.value(x);
                if a > 0.0 {
                    prop_assert!(state[x] >= a * (-g.d_mu() * s.t).exp() - 10.0 * tol);
                }
            }
            let u = GraphFunction::on_interior(
                &g,
                &dom,
                &dom.interior().iter().map(|&x| state[x]).collect::<Vec<_>>(),
            )
            .unwrap();
            let j = functional_j(&g, &dom, &eig, &u).unwrap();
            let averaged: f64 = dom
                .interior()
                .iter()
                .map(|&x| g.mu(x) * eig.phi1.value(x) * nl.f(state[x]))
                .sum();
            prop_assert!(averaged >= nl.f(j) - 1e-10 * (1.0 + nl.f(j).abs()));
        }
    }
}

#[test]
fn j_functional_examples() {
    let g = build_graph(&GraphSpec::Path(6)).unwrap();
    let dom = DomainDecomposition::from_vertices(&g, &[1, 2, 3, 4]).unwrap();
    let eig = first_eigenpair(&g, &dom).unwrap();
    assert!((eig.phi1.value(2) - 0.5).abs() < 1e-14);
    let u = GraphFunction::on_interior(&g, &dom, &[2.0, 4.0]).unwrap();
    assert!((functional_j(&g, &dom, &eig, &u).unwrap() - 3.0).abs() < 1e-14);
    let zero = GraphFunction::on_interior(&g, &dom, &[0.0, 0.0]).unwrap();
    assert_eq!(functional_j(&g, &dom, &eig, &zero).unwrap(), 0.0);
    let full = GraphFunction::constant(&g, 1.0);
    assert!(functional_j(&g, &dom, &eig, &full).is_err());
}

#[test]
fn j_starts_at_kappa_and_linear_flow_is_exact() {
    let g = weighted_random(30, 0.1, 12);
    let mut r = rng(12);
    let dom = random_domain(&g, &mut r);
    let eig = first_eigenpair(&g, &dom).unwrap();
    let init = interior_function(&g, &dom, |_| r.random_range(0.5..1.5));
    let kappa: f64 = dom
        .interior()
        .iter()
        .map(|&x| g.mu(x) * init.value(x) * eig.phi1.value(x))
        .sum();
    let nl = Nonlinearity::linear();
    let rec = recorded_dirichlet_run(&g, &dom, init, &nl, 2.0);
    assert!((rec.samples[0].j.unwrap() - kappa).abs() <= 1e-14 * kappa);
    for s in &rec.samples {
        let exact = kappa * ((1.0 - eig.lambda1) * s.t).exp();
        assert!((s.j.unwrap() - exact).abs() <= 1e-6 * exact, "t={}", s.t);
    }
    let rep = check_j_inequality(&rec, eig.lambda1, &nl).unwrap();
    assert!(rep.max_relative <= 1e-3);
}

#[test]
fn j_inequality_needs_enough_samples() {
    let (g, mut cfg) = single_vertex(1.0);
    cfg.t_max = 0.5;
    cfg.output_interval = Some(0.25);
    let nl = Nonlinearity::power(1.0).unwrap();
    let rec = integrate(&g, &cfg, &nl).unwrap();
    assert!(matches!(
        check_j_inequality(&rec, 2.0, &nl),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn comparison_on_path() {
    let g = build_graph(&GraphSpec::Path(6)).unwrap();
    let dom = DomainDecomposition::from_vertices(&g, &[1, 2, 3, 4]).unwrap();
    let nl = Nonlinearity::power(1.0).unwrap();
    let lower = GraphFunction::on_interior(&g, &dom, &[0.4, 0.7]).unwrap();
    let upper = lower.scaled(1.5);
    let lo = recorded_dirichlet_run(&g, &dom, lower.clone(), &nl, 3.0);
    let hi = recorded_dirichlet_run(&g, &dom, upper, &nl, 3.0);
    assert!(check_comparison(&hi, &lo).unwrap() <= 1e-6);
    let same = recorded_dirichlet_run(&g, &dom, lower, &nl, 3.0);
    assert!(check_comparison(&same, &lo).unwrap() <= 1e-12);

    let mut coarse = SimulationConfig::new(
        Problem::Dirichlet(dom.clone()),
        GraphFunction::on_interior(&g, &dom, &[0.4, 0.7]).unwrap(),
    );
    coarse.t_max = 3.0;
    coarse.output_interval = Some(0.5);
    coarse.record_states = true;
    coarse.steady_state = false;
    let coarse = integrate(&g, &coarse, &nl).unwrap();
    assert!(matches!(
        check_comparison(&hi, &coarse),
        Err(Error::MismatchedGrids(..))
    ));
}

#[test]
fn zero_data_is_rejected() {
    let (g, mut cfg) = single_vertex(1.0);
    cfg.initial = GraphFunction::on_interior(&g, cfg.problem.domain().unwrap(), &[0.0]).unwrap();
    let nl = Nonlinearity::power(1.0).unwrap();
    assert!(matches!(
        integrate(&g, &cfg, &nl),
        Err(Error::TrivialInitialData)
    ));
}

#[test]
fn phase_line_of_single_vertex() {
    let nl = Nonlinearity::power(1.0).unwrap();
    for (a, expected) in [
        (1.0, Verdict::Bounded),
        (1.5, Verdict::Bounded),
        (2.5, Verdict::Blowup),
        (3.0, Verdict::Blowup),
    ] {
        let (g, cfg) = single_vertex(a);
        let rec = integrate(&g, &cfg, &nl).unwrap();
        assert_eq!(rec.verdict, expected, "a = {a}");
        if expected == Verdict::Blowup {
            let exact = 0.5 * (a / (a - 2.0)).ln();
            assert!((rec.t_est.unwrap() - exact).abs() <= 1e-6 * exact);
            assert!(rec.t_uncertainty.unwrap() > 0.0);
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let nl = Nonlinearity::power(1.0).unwrap();
    let (g, cfg) = single_vertex(3.0);
    for edit in [
        |c: &mut SimulationConfig| c.t_max = -1.0,
        |c: &mut SimulationConfig| c.local_tol = 0.0,
        |c: &mut SimulationConfig| c.dt_min = 1.0,
        |c: &mut SimulationConfig| c.record_stride = 0,
    ] {
        let mut bad = cfg.clone();
        edit(&mut bad);
        assert!(integrate(&g, &bad, &nl).is_err());
    }
    let mut wrong_support = cfg.clone();
    wrong_support.initial = GraphFunction::constant(&g, 1.0);
    assert!(integrate(&g, &wrong_support, &nl).is_err());
}
