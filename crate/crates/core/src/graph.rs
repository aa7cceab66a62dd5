//! Weighted locally finite graphs (finite truncations), hop distances, balls
//! and volume-growth estimation.
//!
//! Vertices are dense `0..n` indices. Each undirected edge is stored twice in a
//! compressed adjacency layout, once per endpoint, with the same weight.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    mu: Vec<f64>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    /// m(x) = sum of incident weights.
    m: Vec<f64>,
    d_mu: f64,
    labels: Vec<String>,
}

impl WeightedGraph {
    /// Builds a graph from per-vertex measures and a list of undirected edges,
    /// each listed once. Validates positivity, self-loops, duplicates and
    /// connectedness.
    pub fn from_edges(mu: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::InvalidGenerator("graph has no vertices".into()));
        }
        for (x, &value) in mu.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::BadMeasure { vertex: x, value });
            }
        }
        let mut seen: HashMap<(usize, usize), f64> = HashMap::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for &(x, y, w) in edges {
            if x >= n {
                return Err(Error::UnknownVertex(x.to_string()));
            }
            if y >= n {
                return Err(Error::UnknownVertex(y.to_string()));
            }
            if x == y {
                return Err(Error::SelfLoop(x));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::BadWeight { x, y, value: w });
            }
            let key = (x.min(y), x.max(y));
            if let Some(&prev) = seen.get(&key) {
                if prev.to_bits() != w.to_bits() {
                    return Err(Error::AsymmetricWeight {
                        x,
                        y,
                        forward: prev,
                        backward: w,
                    });
                }
                return Err(Error::DuplicateEdge { x, y });
            }
            seen.insert(key, w);
            degree[x] += 1;
            degree[y] += 1;
        }

        let mut offsets = vec![0usize; n + 1];
        for x in 0..n {
            offsets[x + 1] = offsets[x] + degree[x];
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &(x, y, w) in edges {
            neighbors[cursor[x]] = y;
            weights[cursor[x]] = w;
            cursor[x] += 1;
            neighbors[cursor[y]] = x;
            weights[cursor[y]] = w;
            cursor[y] += 1;
        }
        // Sort each adjacency row so iteration order is independent of input order.
        for x in 0..n {
            let range = offsets[x]..offsets[x + 1];
            let mut row: Vec<(usize, f64)> = neighbors[range.clone()]
                .iter()
                .copied()
                .zip(weights[range.clone()].iter().copied())
                .collect();
            row.sort_by_key(|&(y, _)| y);
            for (k, (y, w)) in row.into_iter().enumerate() {
                neighbors[range.start + k] = y;
                weights[range.start + k] = w;
            }
        }

        let m: Vec<f64> = (0..n)
            .map(|x| weights[offsets[x]..offsets[x + 1]].iter().sum())
            .collect();
        let d_mu = compute_d_mu(&m, &mu);
        let graph = WeightedGraph {
            mu,
            offsets,
            neighbors,
            weights,
            m,
            d_mu,
            labels: (0..n).map(|x| x.to_string()).collect(),
        };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    /// Replaces the vertex labels (used by file loaders to keep the original ids).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} labels, got {}",
                self.len(),
                labels.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn mu(&self, x: usize) -> f64 {
        self.mu[x]
    }

    pub fn measures(&self) -> &[f64] {
        &self.mu
    }

    /// m(x), the total weight incident to x.
    pub fn m(&self, x: usize) -> f64 {
        self.m[x]
    }

    /// D_mu = max_x m(x)/mu(x), cached at construction.
    pub fn d_mu(&self) -> f64 {
        self.d_mu
    }

    pub fn recompute_d_mu(&self) -> f64 {
        let m: Vec<f64> = (0..self.len())
            .map(|x| self.neighbors(x).map(|(_, w)| w).sum())
            .collect();
        compute_d_mu(&m, &self.mu)
    }

    /// Neighbors of x with their edge weights, sorted by neighbor id.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, x: usize) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    pub fn edge_weight(&self, x: usize, y: usize) -> Option<f64> {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.neighbors[range.clone()]
            .binary_search(&y)
            .ok()
            .map(|k| self.weights[range.start + k])
    }

    /// Undirected edges `(x, y, w)` with `x < y`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |x| {
            self.neighbors(x)
                .filter(move |&(y, _)| x < y)
                .map(move |(y, w)| (x, y, w))
        })
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Resolves an external vertex id (as written in files and on the command line).
    pub fn resolve(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(x.to_string()))
        }
    }

    /// Same graph with every edge weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: f64) -> Result<Self> {
        let edges: Vec<_> = self.edges().map(|(x, y, w)| (x, y, w * factor)).collect();
        WeightedGraph::from_edges(self.mu.clone(), &edges)?.with_labels(self.labels.clone())
    }

    fn component_count(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(x) = stack.pop() {
                for (y, _) in self.neighbors(x) {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }

    /// Hop distances from `source` to every vertex (BFS).
    pub fn distances_from(&self, source: usize) -> Result<Vec<usize>> {
        self.check_vertex(source)?;
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<usize> {
        self.check_vertex(y)?;
        Ok(self.distances_from(x)?[y])
    }

    /// Largest hop distance from x.
    pub fn eccentricity(&self, x: usize) -> Result<usize> {
        Ok(self.distances_from(x)?.into_iter().max().unwrap_or(0))
    }

    /// Vertices of B(x, r) = {y : d(x,y) <= r}, in increasing id order.
    pub fn ball(&self, x: usize, r: f64) -> Result<Vec<usize>> {
        let dist = self.distances_from(x)?;
        Ok((0..self.len()).filter(|&y| (dist[y] as f64) <= r).collect())
    }

    /// V(x, r) = sum of mu over B(x, r).
    pub fn ball_volume(&self, x: usize, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be >= 0, got {r}"
            )));
        }
        let dist = self.distances_from(x)?;
        Ok(dist
            .iter()
            .zip(&self.mu)
            .filter(|(&d, _)| (d as f64) <= r)
            .map(|(_, &mu)| mu)
            .sum())
    }

    pub fn total_volume(&self) -> f64 {
        self.mu.iter().sum()
    }
}

fn compute_d_mu(m: &[f64], mu: &[f64]) -> f64 {
    m.iter().zip(mu).map(|(m, mu)| m / mu).fold(0.0, f64::max)
}

/// Result of fitting V(center, r) <= c0 r^m.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrowthEstimate {
    pub m_degree: f64,
    pub c0: f64,
    pub center: usize,
    pub radii: Vec<usize>,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

impl VolumeGrowthEstimate {
    pub fn bound(&self, r: f64) -> f64 {
        self.c0 * r.powf(self.m_degree)
    }
}

/// Fits the volume-growth degree around `center` by least squares on
/// `(log r, log V(center, r))`.
///
/// Only the upper half of `1..=r_max` enters the fit: the growth degree is an
/// asymptotic exponent and small balls are dominated by lower-order terms
/// (on Z^2, V = 2r^2 + 2r + 1). The prefactor is then raised just enough that
/// `V(center, r) <= c0 r^m` holds on every fitted radius.
pub fn estimate_volume_growth(
    g: &WeightedGraph,
    center: usize,
    r_max: usize,
) -> Result<VolumeGrowthEstimate> {
    if r_max < 4 {
        return Err(Error::TooFewRadii(r_max));
    }
    let dist = g.distances_from(center)?;
    let ecc = dist.iter().copied().max().unwrap_or(0);
    if r_max >= ecc {
        return Err(Error::TruncationTooSmall {
            center,
            radius: r_max,
        });
    }
    // Shell volumes, then prefix sums give V(center, r) for every integer r.
    let mut shell = vec![0.0; ecc + 1];
    for (y, &d) in dist.iter().enumerate() {
        shell[d] += g.mu(y);
    }
    let mut volume = Vec::with_capacity(ecc + 1);
    let mut acc = 0.0;
    for s in shell {
        acc += s;
        volume.push(acc);
    }

    let lower = (r_max / 2).min(r_max - 3).max(1);
    let radii: Vec<usize> = (lower..=r_max).collect();
    if radii.len() < 4 {
        return Err(Error::TooFewRadii(radii.len()));
    }
    let xs: Vec<f64> = radii.iter().map(|&r| (r as f64).ln()).collect();
    let ys: Vec<f64> = radii.iter().map(|&r| volume[r].ln()).collect();
    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    if !(slope > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "volume growth fit produced non-positive degree {slope}"
        )));
    }
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();

    let mut c0 = intercept.exp();
    for &r in &radii {
        let needed = volume[r] / (r as f64).powf(slope);
        if needed > c0 {
            c0 = needed;
        }
    }
    // Round-off in powf can leave the inequality violated by an ulp.
    while radii
        .iter()
        .any(|&r| volume[r] > c0 * (r as f64).powf(slope))
    {
        c0 = c0.next_up();
    }

    Ok(VolumeGrowthEstimate {
        m_degree: slope,
        c0,
        center,
        radii,
        residual,
    })
}

/// Generator descriptor for [`build_graph`].
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Path(usize),
    Cycle(usize),
    /// `side^dim` grid with nearest-neighbor edges.
    Lattice {
        dim: usize,
        side: usize,
    },
    /// One hub (vertex 0) and `n - 1` leaves.
    Star(usize),
    Complete(usize),
    /// Random spanning tree plus each remaining pair with probability `p`.
    Random {
        n: usize,
        p: f64,
        seed: u64,
    },
    File(PathBuf),
}

impl GraphSpec {
    /// A natural "middle" vertex for generated families.
    pub fn center(&self) -> Option<usize> {
        match *self {
            GraphSpec::Path(n) => Some(n / 2),
            GraphSpec::Cycle(_) | GraphSpec::Complete(_) | GraphSpec::Random { .. } => Some(0),
            GraphSpec::Star(_) => Some(0),
            GraphSpec::Lattice { dim, side } => Some(lattice_index(side, &vec![side / 2; dim])),
            GraphSpec::File(_) => None,
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    /// Parses `path:5`, `cycle:6`, `lattice:2:11`, `star:4`, `complete:10`,
    /// `random:50:0.1:7` or `file:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGenerator(s.to_string());
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        if kind == "file" {
            let rest = s.strip_prefix("file:").ok_or_else(bad)?;
            return Ok(GraphSpec::File(PathBuf::from(rest)));
        }
        let args: Vec<&str> = parts.collect();
        let int = |k: usize| -> Result<usize> {
            args.get(k).and_then(|a| a.parse().ok()).ok_or_else(bad)
        };
        let spec = match (kind, args.len()) {
            ("path", 1) => GraphSpec::Path(int(0)?),
            ("cycle", 1) => GraphSpec::Cycle(int(0)?),
            ("lattice", 2) => GraphSpec::Lattice {
                dim: int(0)?,
                side: int(1)?,
            },
            ("star", 1) => GraphSpec::Star(int(0)?),
            ("complete", 1) => GraphSpec::Complete(int(0)?),
            ("random", 3) => GraphSpec::Random {
                n: int(0)?,
                p: args[1].parse().map_err(|_| bad())?,
                seed: args[2].parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Lattice { dim, side } => write!(f, "lattice:{dim}:{side}"),
            GraphSpec::Star(n) => write!(f, "star:{n}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::Random { n, p, seed } => write!(f, "random:{n}:{p}:{seed}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Uniform measure / weight overrides for generated families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub mu: f64,
    pub weight: f64,
}

impl Default for Uniform {
    fn default() -> Self {
        Uniform {
            mu: 1.0,
            weight: 1.0,
        }
    }
}

/// Row-major index of lattice coordinates (first coordinate fastest).
pub fn lattice_index(side: usize, coords: &[usize]) -> usize {
    coords.iter().rev().fold(0, |acc, &c| acc * side + c)
}

pub fn build_graph(spec: &GraphSpec) -> Result<WeightedGraph> {
    build_graph_with(spec, Uniform::default())
}

pub fn build_graph_with(spec: &GraphSpec, uniform: Uniform) -> Result<WeightedGraph> {
    let need = |ok: bool, msg: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGenerator(format!("{spec}: {msg}")))
        }
    };
    let w = uniform.weight;
    let (n, pairs): (usize, Vec<(usize, usize)>) = match *spec {
        GraphSpec::Path(n) => {
            need(n >= 2, "n must be >= 2")?;
            (n, (0..n - 1).map(|i| (i, i + 1)).collect())
        }
        GraphSpec::Cycle(n) => {
            need(n >= 3, "a cycle needs n >= 3")?;
            (n, (0..n).map(|i| (i, (i + 1) % n)).collect())
        }
        GraphSpec::Lattice { dim, side } => {
            need((1..=3).contains(&dim), "dim must be 1, 2 or 3")?;
            need(side >= 2, "side must be >= 2")?;
            let n = side.pow(dim as u32);
            let mut pairs = Vec::with_capacity(dim * n);
            for x in 0..n {
                let mut stride = 1;
                for _ in 0..dim {
                    let coord = (x / stride) % side;
                    if coord + 1 < side {
                        pairs.push((x, x + stride));
                    }
                    stride *= side;
                }
            }
            (n, pairs)
        }
        GraphSpec::Star(n) => {
            need(n >= 2, "n must be >= 2")?;
            (n, (1..n).map(|i| (0, i)).collect())
        }
        GraphSpec::Complete(n) => {
            need(n >= 2, "n must be >= 2")?;
            let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push((i, j));
                }
            }
            (n, pairs)
        }
        GraphSpec::Random { n, p, seed } => {
            need(n >= 2, "n must be >= 2")?;
            need((0.0..=1.0).contains(&p), "p must lie in [0, 1]")?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pairs = Vec::new();
            let mut tree = vec![vec![false; n]; n];
            for i in 1..n {
                let j = rng.random_range(0..i);
                pairs.push((j, i));
                tree[j][i] = true;
            }
            for i in 0..n {
                for j in i + 1..n {
                    if !tree[i][j] && rng.random::<f64>() < p {
                        pairs.push((i, j));
                    }
                }
            }
            (n, pairs)
        }
        GraphSpec::File(ref path) => return load_graph_file(path),
    };
    let edges: Vec<_> = pairs.into_iter().map(|(x, y)| (x, y, w)).collect();
    WeightedGraph::from_edges(vec![uniform.mu; n], &edges)
}

pub fn load_graph_file(path: &Path) -> Result<WeightedGraph> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text)
}

/// Parses the line-oriented graph format:
///
/// ```text
/// # comment
/// v <id> <mu>
/// e <id1> <id2> <weight>
/// ```
///
/// Ids are arbitrary tokens, remapped to dense indices in order of their `v`
/// records; the original ids become vertex labels.
pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut mu = Vec::new();
    let mut edges = Vec::new();
    let mut seen_edge = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let real = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| err(format!("expected a decimal real, got `{s}`")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(err(format!("value must be a positive real, got `{s}`")));
            }
            Ok(v)
        };
        match fields.as_slice() {
            ["v", id, value] => {
                if seen_edge {
                    return Err(err("vertex record after edge records".into()));
                }
                if index.contains_key(*id) {
                    return Err(err(format!("duplicate vertex `{id}`")));
                }
                index.insert(id.to_string(), labels.len());
                labels.push(id.to_string());
                mu.push(real(value)?);
            }
            ["e", a, b, value] => {
                seen_edge = true;
                let x = *index
                    .get(*a)
                    .ok_or_else(|| err(format!("unknown vertex `{a}`")))?;
                let y = *index
                    .get(*b)
                    .ok_or_else(|| err(format!("unknown vertex `{b}`")))?;
                edges.push((x, y, real(value)?));
            }
            _ => return Err(err(format!("malformed record `{line}`"))),
        }
    }
    if mu.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no vertex records".into(),
        });
    }
    WeightedGraph::from_edges(mu, &edges)?.with_labels(labels)
}

/// Serializes a graph in the format read by [`parse_graph`].
pub fn format_graph(g: &WeightedGraph) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# {} vertices, {} edges\n",
        g.len(),
        g.edge_count()
    ));
    for x in 0..g.len() {
        out.push_str(&format!("v {} {}\n", g.label(x), g.mu(x)));
    }
    for (x, y, w) in g.edges() {
        out.push_str(&format!("e {} {} {}\n", g.label(x), g.label(y), w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path2_degrees() {
        let g = build_graph(&GraphSpec::Path(2)).unwrap();
        assert_eq!(g.m(0), 1.0);
        assert_eq!(g.m(1), 1.0);
        assert_eq!(g.d_mu(), 1.0);
    }

    #[test]
    fn star4_degrees() {
        let g = build_graph(&GraphSpec::Star(4)).unwrap();
        assert_eq!(g.m(0), 3.0);
        for leaf in 1..4 {
            assert_eq!(g.m(leaf), 1.0);
        }
        assert_eq!(g.d_mu(), 3.0);
    }

    #[test]
    fn lattice_1d_degrees() {
        let g = build_graph(&GraphSpec::Lattice { dim: 1, side: 21 }).unwrap();
        assert_eq!(g.m(0), 1.0);
        assert_eq!(g.m(20), 1.0);
        assert!((1..20).all(|x| g.m(x) == 2.0));
        assert_eq!(g.d_mu(), 2.0);
    }

    #[test]
    fn distances() {
        let path = build_graph(&GraphSpec::Path(5)).unwrap();
        assert_eq!(path.distance(0, 4).unwrap(), 4);
        assert_eq!(path.distance(3, 3).unwrap(), 0);
        let cycle = build_graph(&GraphSpec::Cycle(6)).unwrap();
        assert_eq!(cycle.distance(0, 3).unwrap(), 3);
        assert!(matches!(path.distance(0, 9), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn ball_volumes() {
        let path = build_graph(&GraphSpec::Path(5)).unwrap();
        assert_eq!(path.ball_volume(2, 1.0).unwrap(), 3.0);
        assert_eq!(path.ball_volume(2, 0.0).unwrap(), 1.0);
        assert_eq!(path.ball_volume(2, 10.0).unwrap(), 5.0);
        let weighted = build_graph_with(
            &GraphSpec::Path(3),
            Uniform {
                mu: 2.5,
                weight: 1.0,
            },
        )
        .unwrap();
        assert_eq!(weighted.ball_volume(0, 0.0).unwrap(), 2.5);
    }

    #[test]
    fn lattice_2d_ball_matches_brute_force() {
        let side = 11;
        let g = build_graph(&GraphSpec::Lattice { dim: 2, side }).unwrap();
        let c = lattice_index(side, &[5, 5]);
        // Brute force: count grid points within l1 distance 2 of (5,5).
        let mut count = 0;
        for i in 0..side as i64 {
            for j in 0..side as i64 {
                if (i - 5).abs() + (j - 5).abs() <= 2 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 13);
        assert_eq!(g.ball_volume(c, 2.0).unwrap(), count as f64);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(matches!(
            WeightedGraph::from_edges(vec![1.0; 3], &[(0, 1, 1.0)]),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(matches!(
            WeightedGraph::from_edges(vec![1.0, 0.0], &[(0, 1, 1.0)]),
            Err(Error::BadMeasure { vertex: 1, .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edges(vec![1.0; 2], &[(0, 1, -1.0)]),
            Err(Error::BadWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edges(vec![1.0; 2], &[(0, 1, 1.0), (1, 0, 1.0)]),
            Err(Error::DuplicateEdge { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edges(vec![1.0; 2], &[(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::AsymmetricWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edges(vec![1.0; 2], &[(0, 1, 1.0), (1, 1, 2.0)]),
            Err(Error::SelfLoop(1))
        ));
        assert!(build_graph(&GraphSpec::Lattice { dim: 4, side: 3 }).is_err());
        assert!(build_graph(&GraphSpec::Path(1)).is_err());
    }

    #[test]
    fn file_round_trip_keeps_labels() {
        let text = "# demo\nv a 1.5\nv b 2\nv c 1\ne a b 0.5\ne b c 3\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.resolve("b").unwrap(), 1);
        assert_eq!(g.m(1), 3.5);
        assert_eq!(g.d_mu(), 3.0);
        let again = parse_graph(&format_graph(&g)).unwrap();
        assert_eq!(again.labels(), g.labels());
        assert_eq!(
            again.edges().collect::<Vec<_>>(),
            g.edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn file_errors() {
        let cases = [
            "v a 1\nv a 1\n",
            "v a 1\nv b 1\ne a b 1\nv c 1\n",
            "v a 1\nv b 1\ne a b 1\ne b a 2\n",
            "v a 1\nv b 1\ne a b 1\ne a b 1\n",
            "v a 1\nv b 1\ne a c 1\n",
            "v a -1\nv b 1\ne a b 1\n",
            "v a 1\nv b 1\ne a b zero\n",
            "v a 1\nv b 1\nx\n",
            "v a 1\nv b 1\nv c 1\ne a b 1\n",
        ];
        for text in cases {
            assert!(parse_graph(text).is_err(), "accepted: {text:?}");
        }
    }

    #[test]
    fn volume_growth_rejects_exhausting_radius() {
        let g = build_graph(&GraphSpec::Complete(50)).unwrap();
        assert!(matches!(
            estimate_volume_growth(&g, 0, 5),
            Err(Error::TruncationTooSmall { .. })
        ));
        let path = build_graph(&GraphSpec::Path(101)).unwrap();
        assert!(matches!(
            estimate_volume_growth(&path, 50, 3),
            Err(Error::TooFewRadii(_))
        ));
    }

    #[test]
    fn volume_growth_degree_lattices() {
        let g1 = build_graph(&GraphSpec::Lattice { dim: 1, side: 2001 }).unwrap();
        let est = estimate_volume_growth(&g1, 1000, 100).unwrap();
        assert!((est.m_degree - 1.0).abs() <= 0.05, "{est:?}");
        for &r in &est.radii {
            assert!(g1.ball_volume(1000, r as f64).unwrap() <= est.bound(r as f64));
        }
        let spec = GraphSpec::Lattice { dim: 2, side: 201 };
        let g2 = build_graph(&spec).unwrap();
        let c = spec.center().unwrap();
        let est = estimate_volume_growth(&g2, c, 40).unwrap();
        assert!((est.m_degree - 2.0).abs() <= 0.1, "{est:?}");
        for &r in &est.radii {
            assert!(g2.ball_volume(c, r as f64).unwrap() <= est.bound(r as f64));
        }
    }

    #[test]
    fn random_generator_is_connected_and_deterministic() {
        let spec = GraphSpec::Random {
            n: 40,
            p: 0.05,
            seed: 11,
        };
        let a = build_graph(&spec).unwrap();
        let b = build_graph(&spec).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert!(a.edge_count() >= 39);
    }

    #[test]
    fn spec_strings_parse() {
        for s in [
            "path:5",
            "cycle:6",
            "lattice:2:11",
            "star:4",
            "complete:10",
            "random:20:0.1:3",
        ] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("lattice:2".parse::<GraphSpec>().is_err());
    }
}
