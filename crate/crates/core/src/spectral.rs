//! First Dirichlet eigenpair of -Delta_Omega.
//!
//! -Delta_Omega is self-adjoint for the mu-weighted inner product, so every
//! solve works on the similar symmetric matrix S = M^{1/2} L M^{-1/2}
//! (M = diag(mu)) and maps eigenvectors back with M^{-1/2}. Up to
//! [`DENSE_CAP`] interior vertices a dense symmetric eigensolve is used;
//! beyond that, matrix-free inverse iteration with conjugate-gradient solves.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::laplacian::{DomainDecomposition, GraphFunction, RestrictedLaplacian, DENSE_CAP};

/// Iteration cap for the matrix-free solver.
pub const MAX_ITERATIONS: usize = 10_000;
/// Relative eigenvalue change that ends the matrix-free iteration.
pub const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Positive on the interior, normalized so that sum mu phi = 1.
    pub phi1: GraphFunction,
    /// mu-weighted norm of (-Delta_Omega phi1 - lambda1 phi1).
    pub residual: f64,
}

impl EigenPair {
    pub fn phi_interior(&self, dom: &DomainDecomposition) -> Vec<f64> {
        self.phi1.interior_values(dom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Dense,
    /// Inverse iteration from a seeded random start vector.
    Iterative {
        seed: u64,
    },
}

pub fn first_eigenpair(g: &WeightedGraph, dom: &DomainDecomposition) -> Result<EigenPair> {
    let method = if dom.interior_len() <= DENSE_CAP {
        EigenMethod::Dense
    } else {
        EigenMethod::Iterative { seed: 0 }
    };
    first_eigenpair_with(g, dom, method)
}

pub fn first_eigenpair_with(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    method: EigenMethod,
) -> Result<EigenPair> {
    let op = RestrictedLaplacian::dirichlet(g, dom);
    let (lambda, v) = match method {
        EigenMethod::Dense => smallest_dense(&op)?,
        EigenMethod::Iterative { seed } => smallest_iterative(&op, seed)?,
    };
    finish(g, dom, &op, lambda, v)
}

/// All eigenvalues of -Delta_Omega, ascending. There are |interior| of them.
pub fn full_spectrum(g: &WeightedGraph, dom: &DomainDecomposition) -> Result<Vec<f64>> {
    let op = RestrictedLaplacian::dirichlet(g, dom);
    let s = op.symmetrized_dense()?;
    let mut values: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    if let Some(&first) = values.first() {
        if !(first > 0.0) {
            return Err(Error::Integrity(format!(
                "-Delta_Omega has non-positive eigenvalue {first}"
            )));
        }
    }
    Ok(values)
}

/// <h, -Delta_Omega h>_mu / <h, h>_mu for h given in interior order.
pub fn rayleigh_quotient(g: &WeightedGraph, dom: &DomainDecomposition, h: &[f64]) -> f64 {
    let op = RestrictedLaplacian::dirichlet(g, dom);
    let mut lh = vec![0.0; h.len()];
    op.apply(h, &mut lh);
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &x) in dom.interior().iter().enumerate() {
        num -= g.mu(x) * h[k] * lh[k];
        den += g.mu(x) * h[k] * h[k];
    }
    num / den
}

fn smallest_dense(op: &RestrictedLaplacian) -> Result<(f64, Vec<f64>)> {
    let s = op.symmetrized_dense()?;
    let eig = SymmetricEigen::new(s);
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidDomain("empty interior".into()))?;
    Ok((lambda, eig.eigenvectors.column(k).iter().copied().collect()))
}

/// y = S v with S = M^{1/2} (-Delta) M^{-1/2}.
struct SymmetrizedOp<'a> {
    op: &'a RestrictedLaplacian,
    sqrt_mu: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> SymmetrizedOp<'a> {
    fn new(op: &'a RestrictedLaplacian) -> Self {
        let sqrt_mu = op.measures().iter().map(|m| m.sqrt()).collect();
        SymmetrizedOp {
            op,
            sqrt_mu,
            scratch: vec![0.0; op.dim()],
        }
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        for ((s, &vi), &w) in self.scratch.iter_mut().zip(v).zip(&self.sqrt_mu) {
            *s = vi / w;
        }
        self.op.apply(&self.scratch, out);
        for (o, &w) in out.iter_mut().zip(&self.sqrt_mu) {
            *o *= -w;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradients for S x = b (S symmetric positive definite).
fn conjugate_gradient(s: &mut SymmetrizedOp<'_>, b: &[f64], x: &mut [f64]) -> Result<()> {
    let n = b.len();
    let max_iter = 20 * n + 1000;
    let mut r = b.to_vec();
    let mut ax = vec![0.0; n];
    s.apply(x, &mut ax);
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = (1e-14 * norm(b)).powi(2);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if rr <= target {
            return Ok(());
        }
        s.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    // Round-off can stall just above the target; accept near-converged solves.
    if rr <= target * 1e4 {
        Ok(())
    } else {
        Err(Error::NoConvergence(max_iter))
    }
}

fn smallest_iterative(op: &RestrictedLaplacian, seed: u64) -> Result<(f64, Vec<f64>)> {
    let n = op.dim();
    let mut s = SymmetrizedOp::new(op);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut sv = vec![0.0; n];
    let mut lambda_prev = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut x = v.clone();
        conjugate_gradient(&mut s, &v, &mut x)?;
        let nx = norm(&x);
        for i in 0..n {
            v[i] = x[i] / nx;
        }
        s.apply(&v, &mut sv);
        let lambda = dot(&v, &sv);
        let res = sv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let change = (lambda - lambda_prev).abs();
        lambda_prev = lambda;
        if change <= EIGEN_TOL * lambda.abs() && res <= 1e-11 * lambda.abs() {
            return Ok((lambda, v));
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}

/// Maps a symmetrized eigenvector back, fixes its sign, normalizes and checks
/// the eigenpair invariants.
fn finish(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    op: &RestrictedLaplacian,
    lambda: f64,
    v: Vec<f64>,
) -> Result<EigenPair> {
    let mu = op.measures();
    let mut phi: Vec<f64> = v.iter().zip(&mu).map(|(v, m)| v / m.sqrt()).collect();
    let mass: f64 = phi.iter().zip(&mu).map(|(p, m)| p * m).sum();
    if mass == 0.0 {
        return Err(Error::Integrity("first eigenvector has zero mass".into()));
    }
    phi.iter_mut().for_each(|p| *p /= mass);

    if !(lambda > 0.0) {
        return Err(Error::Integrity(format!(
            "lambda1 = {lambda} is not positive"
        )));
    }
    if let Some((k, &p)) = phi.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::Integrity(format!(
            "phi1 is not positive at vertex {} ({p})",
            dom.interior()[k]
        )));
    }

    let mut lphi = vec![0.0; phi.len()];
    op.apply(&phi, &mut lphi);
    let residual = lphi
        .iter()
        .zip(&phi)
        .zip(&mu)
        .map(|((d, p), m)| m * (-d - lambda * p).powi(2))
        .sum::<f64>()
        .sqrt();
    if residual > 1e-10 * lambda {
        return Err(Error::Integrity(format!(
            "eigen residual {residual:e} exceeds 1e-10 * lambda1"
        )));
    }
    Ok(EigenPair {
        lambda1: lambda,
        phi1: GraphFunction::on_interior(g, dom, &phi)?,
        residual,
    })
}
