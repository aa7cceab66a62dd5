#![allow(dead_code)]

use graphblow::graph::{build_graph, GraphSpec, WeightedGraph};
use graphblow::laplacian::{DomainDecomposition, GraphFunction};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected graph with random measures in [0.5, 2) and weights in
/// [0.2, 3).
pub fn weighted_random(n: usize, p: f64, seed: u64) -> WeightedGraph {
    let base = build_graph(&GraphSpec::Random { n, p, seed }).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let mu: Vec<f64> = (0..n).map(|_| r.random_range(0.5..2.0)).collect();
    let edges: Vec<_> = base
        .edges()
        .map(|(x, y, _)| (x, y, r.random_range(0.2..3.0)))
        .collect();
    WeightedGraph::from_edges(mu, &edges).unwrap()
}

/// Five small families used by the heat-kernel suites.
pub fn kernel_families() -> Vec<(&'static str, WeightedGraph)> {
    vec![
        ("path:40", build_graph(&GraphSpec::Path(40)).unwrap()),
        ("cycle:30", build_graph(&GraphSpec::Cycle(30)).unwrap()),
        (
            "lattice:2:8",
            build_graph(&GraphSpec::Lattice { dim: 2, side: 8 }).unwrap(),
        ),
        ("star:25", build_graph(&GraphSpec::Star(25)).unwrap()),
        ("weighted-random:60", weighted_random(60, 0.08, 11)),
    ]
}

/// Delta h computed straight from the definition.
pub fn lap(g: &WeightedGraph, h: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|x| g.neighbors(x).map(|(y, w)| w * (h[y] - h[x])).sum::<f64>() / g.mu(x))
        .collect()
}

/// Dirichlet Laplacian on the interior, values given over V.
pub fn dirichlet_lap(g: &WeightedGraph, dom: &DomainDecomposition, h: &[f64]) -> Vec<f64> {
    let mut ext = vec![0.0; g.len()];
    for &x in dom.interior() {
        ext[x] = h[x];
    }
    let full = lap(g, &ext);
    let mut out = vec![0.0; g.len()];
    for &x in dom.interior() {
        out[x] = full[x];
    }
    out
}

/// Generator matrix of Delta.
pub fn generator(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.len();
    let mut a = DMatrix::zeros(n, n);
    for x in 0..n {
        for (y, w) in g.neighbors(x) {
            a[(x, y)] += w / g.mu(x);
            a[(x, x)] -= w / g.mu(x);
        }
    }
    a
}

/// e^{tA} by scaling and squaring with a 24-term Taylor polynomial.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t;
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let m = a * (t / 2f64.powi(s));
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &m / k as f64;
        result += &term;
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

pub fn expm_apply(a: &DMatrix<f64>, t: f64, g: &[f64]) -> Vec<f64> {
    let e = expm(a, t);
    (e * DVector::from_column_slice(g))
        .iter()
        .copied()
        .collect()
}

/// Full kernel matrix p(t, x, y) from an evaluator's slices.
pub fn kernel_matrix(
    ev: &graphblow::heat_kernel::HeatKernelEvaluator<'_>,
    t: f64,
) -> Vec<Vec<f64>> {
    (0..ev.graph().len())
        .map(|x| ev.kernel_slice(t, x).unwrap().values)
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Random Dirichlet domain: a ball around a random vertex whose interior is
/// non-empty and connected.
pub fn random_domain(g: &WeightedGraph, r: &mut ChaCha8Rng) -> DomainDecomposition {
    loop {
        let center = r.random_range(0..g.len());
        let radius = r.random_range(1..=3) as f64;
        if let Ok(dom) = DomainDecomposition::ball(g, center, radius) {
            return dom;
        }
    }
}

pub fn interior_function(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    mut values: impl FnMut(usize) -> f64,
) -> GraphFunction {
    let v: Vec<f64> = dom.interior().iter().map(|&x| values(x)).collect();
    GraphFunction::on_interior(g, dom, &v).unwrap()
}
