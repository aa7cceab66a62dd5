//! The mu-Laplacian on V, the Dirichlet Laplacian on the interior of a finite
//! vertex set, and their dense matrix forms.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Largest operator dimension assembled as a dense matrix.
pub const DENSE_CAP: usize = 2000;

/// A finite set Omega split into boundary (vertices with a neighbor outside
/// Omega) and interior. Always recomputed from Omega and the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDecomposition {
    omega: Vec<usize>,
    boundary: Vec<usize>,
    interior: Arc<[usize]>,
    /// position[x] = index of x within `interior`.
    position: Vec<Option<usize>>,
}

impl DomainDecomposition {
    pub fn from_vertices(g: &WeightedGraph, omega: &[usize]) -> Result<Self> {
        let n = g.len();
        let mut in_omega = vec![false; n];
        for &x in omega {
            g.check_vertex(x)?;
            if in_omega[x] {
                return Err(Error::InvalidDomain(format!("vertex {x} listed twice")));
            }
            in_omega[x] = true;
        }
        let omega: Vec<usize> = (0..n).filter(|&x| in_omega[x]).collect();
        if omega.is_empty() {
            return Err(Error::InvalidDomain("Omega is empty".into()));
        }
        let (boundary, interior): (Vec<usize>, Vec<usize>) = omega
            .iter()
            .partition(|&&x| g.neighbors(x).any(|(y, _)| !in_omega[y]));
        if boundary.is_empty() {
            return Err(Error::InvalidDomain(
                "Omega has no boundary (it is the whole graph), so -Delta_Omega is singular".into(),
            ));
        }
        if interior.is_empty() {
            return Err(Error::InvalidDomain("interior of Omega is empty".into()));
        }
        let mut position = vec![None; n];
        for (k, &x) in interior.iter().enumerate() {
            position[x] = Some(k);
        }
        // Connectedness of the subgraph induced on the interior.
        let mut seen = vec![false; interior.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(k) = stack.pop() {
            for (y, _) in g.neighbors(interior[k]) {
                if let Some(j) = position[y] {
                    if !seen[j] {
                        seen[j] = true;
                        reached += 1;
                        stack.push(j);
                    }
                }
            }
        }
        if reached != interior.len() {
            return Err(Error::InvalidDomain(
                "subgraph induced on the interior is disconnected".into(),
            ));
        }
        Ok(DomainDecomposition {
            omega,
            boundary,
            interior: interior.into(),
            position,
        })
    }

    /// Omega = B(center, r).
    pub fn ball(g: &WeightedGraph, center: usize, r: f64) -> Result<Self> {
        let omega = g.ball(center, r)?;
        Self::from_vertices(g, &omega)
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }

    pub fn contains_interior(&self, x: usize) -> bool {
        self.position.get(x).copied().flatten().is_some()
    }

    /// Index of x within the interior ordering.
    pub fn interior_index(&self, x: usize) -> Option<usize> {
        self.position.get(x).copied().flatten()
    }

    /// Recomputes boundary and interior from Omega and compares.
    pub fn verify(&self, g: &WeightedGraph) -> bool {
        match DomainDecomposition::from_vertices(g, &self.omega) {
            Ok(fresh) => fresh == *self,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Vertices,
    /// Interior vertex ids, ascending.
    Interior(Arc<[usize]>),
}

/// A real function on V or on an interior set; stored over all of V with the
/// zero extension outside its support.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    values: Vec<f64>,
    support: Support,
}

impl GraphFunction {
    pub fn on_vertices(values: Vec<f64>) -> Self {
        GraphFunction {
            values,
            support: Support::Vertices,
        }
    }

    pub fn constant(g: &WeightedGraph, c: f64) -> Self {
        Self::on_vertices(vec![c; g.len()])
    }

    pub fn zeros(g: &WeightedGraph) -> Self {
        Self::constant(g, 0.0)
    }

    /// Function on the interior given in interior order.
    pub fn on_interior(
        g: &WeightedGraph,
        dom: &DomainDecomposition,
        interior_values: &[f64],
    ) -> Result<Self> {
        if interior_values.len() != dom.interior_len() {
            return Err(Error::SupportMismatch(format!(
                "expected {} interior values, got {}",
                dom.interior_len(),
                interior_values.len()
            )));
        }
        let mut values = vec![0.0; g.len()];
        for (&x, &v) in dom.interior().iter().zip(interior_values) {
            values[x] = v;
        }
        Ok(GraphFunction {
            values,
            support: Support::Interior(dom.interior.clone()),
        })
    }

    /// Restricts a function on V to the interior (values outside are dropped).
    pub fn restrict(&self, dom: &DomainDecomposition) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for &x in dom.interior() {
            values[x] = self.values[x];
        }
        GraphFunction {
            values,
            support: Support::Interior(dom.interior.clone()),
        }
    }

    pub fn indicator(g: &WeightedGraph, x: usize) -> Self {
        let mut values = vec![0.0; g.len()];
        values[x] = 1.0;
        Self::on_vertices(values)
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at x; zero outside the support.
    pub fn value(&self, x: usize) -> f64 {
        self.values.get(x).copied().unwrap_or(0.0)
    }

    /// Values over all of V (zero-extended).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn interior_values(&self, dom: &DomainDecomposition) -> Vec<f64> {
        dom.interior().iter().map(|&x| self.values[x]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Same support, every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        GraphFunction {
            values: self.values.iter().map(|v| v * c).collect(),
            support: self.support.clone(),
        }
    }

    fn check_len(&self, g: &WeightedGraph) -> Result<()> {
        if self.values.len() != g.len() {
            return Err(Error::SupportMismatch(format!(
                "function has {} values, graph has {} vertices",
                self.values.len(),
                g.len()
            )));
        }
        Ok(())
    }

    fn check_interior(&self, g: &WeightedGraph, dom: &DomainDecomposition) -> Result<()> {
        self.check_len(g)?;
        match &self.support {
            Support::Interior(ids) if ids[..] == dom.interior()[..] => Ok(()),
            _ => Err(Error::SupportMismatch(
                "expected a function on the domain interior".into(),
            )),
        }
    }
}

/// Delta h(x) = (1/mu(x)) sum_{y~x} w_xy (h(y) - h(x)).
pub fn apply_laplacian(g: &WeightedGraph, h: &GraphFunction, x: usize) -> Result<f64> {
    g.check_vertex(x)?;
    h.check_len(g)?;
    if h.support != Support::Vertices {
        return Err(Error::SupportMismatch(
            "the mu-Laplacian needs a function on all of V".into(),
        ));
    }
    Ok(laplacian_at(g, h.values(), x))
}

fn laplacian_at(g: &WeightedGraph, h: &[f64], x: usize) -> f64 {
    let hx = h[x];
    g.neighbors(x).map(|(y, w)| w * (h[y] - hx)).sum::<f64>() / g.mu(x)
}

/// Delta h on every vertex.
pub fn laplacian(g: &WeightedGraph, h: &[f64]) -> Vec<f64> {
    (0..g.len()).map(|x| laplacian_at(g, h, x)).collect()
}

/// Delta_Omega h(x) for x in the interior, with h zero outside the interior.
pub fn apply_dirichlet_laplacian(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    h: &GraphFunction,
    x: usize,
) -> Result<f64> {
    g.check_vertex(x)?;
    if !dom.contains_interior(x) {
        return Err(Error::InvalidArgument(format!(
            "vertex {x} is not in the domain interior"
        )));
    }
    h.check_interior(g, dom)?;
    // Stored values are already zero outside the interior.
    Ok(laplacian_at(g, h.values(), x))
}

/// Laplacian restricted to an active vertex set with the zero extension
/// outside it. With the whole vertex set active this is Delta; with the
/// domain interior active it is Delta_Omega.
#[derive(Debug, Clone)]
pub struct RestrictedLaplacian {
    ids: Vec<usize>,
    inv_mu: Vec<f64>,
    /// m(x)/mu(x), counting edges that leave the active set.
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl RestrictedLaplacian {
    pub fn full(g: &WeightedGraph) -> Self {
        let ids: Vec<usize> = (0..g.len()).collect();
        Self::on_active(g, &ids)
    }

    pub fn dirichlet(g: &WeightedGraph, dom: &DomainDecomposition) -> Self {
        Self::on_active(g, dom.interior())
    }

    /// `active` must be ascending and duplicate-free.
    pub fn on_active(g: &WeightedGraph, active: &[usize]) -> Self {
        let mut local = vec![usize::MAX; g.len()];
        for (k, &x) in active.iter().enumerate() {
            local[x] = k;
        }
        let mut offsets = Vec::with_capacity(active.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for &x in active {
            for (y, w) in g.neighbors(x) {
                if local[y] != usize::MAX {
                    cols.push(local[y]);
                    vals.push(w);
                }
            }
            offsets.push(cols.len());
        }
        RestrictedLaplacian {
            ids: active.to_vec(),
            inv_mu: active.iter().map(|&x| 1.0 / g.mu(x)).collect(),
            diag: active.iter().map(|&x| g.m(x) / g.mu(x)).collect(),
            offsets,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// out = Delta h on the active set.
    pub fn apply(&self, h: &[f64], out: &mut [f64]) {
        for i in 0..self.ids.len() {
            let mut acc = 0.0;
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[k] * h[self.cols[k]];
            }
            out[i] = acc * self.inv_mu[i] - self.diag[i] * h[i];
        }
    }

    /// Largest m(x)/mu(x) over the active set.
    pub fn d_mu(&self) -> f64 {
        self.diag.iter().copied().fold(0.0, f64::max)
    }

    /// Dense matrix of -Delta on the active set.
    pub fn negative_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSE_CAP {
            return Err(Error::SizeOverCap {
                size: n,
                cap: DENSE_CAP,
            });
        }
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = self.diag[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                l[(i, self.cols[k])] -= self.vals[k] * self.inv_mu[i];
            }
        }
        Ok(l)
    }

    /// Dense M^{1/2} (-Delta) M^{-1/2}, which is symmetric.
    pub fn symmetrized_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSE_CAP {
            return Err(Error::SizeOverCap {
                size: n,
                cap: DENSE_CAP,
            });
        }
        let sqrt_inv_mu: Vec<f64> = self.inv_mu.iter().map(|v| v.sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            s[(i, i)] = self.diag[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                let j = self.cols[k];
                s[(i, j)] -= self.vals[k] * sqrt_inv_mu[i] * sqrt_inv_mu[j];
            }
        }
        Ok(s)
    }

    /// Measures on the active set.
    pub fn measures(&self) -> Vec<f64> {
        self.inv_mu.iter().map(|v| 1.0 / v).collect()
    }
}

/// Dense matrix L over the interior with L h = -Delta_Omega h.
pub fn assemble_dirichlet_matrix(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
) -> Result<DMatrix<f64>> {
    RestrictedLaplacian::dirichlet(g, dom).negative_dense()
}
