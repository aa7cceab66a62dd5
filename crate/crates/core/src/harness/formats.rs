//! Text formats shared by the CLI and the sweep runner: vertex-set and
//! initial-data specs, function files and trajectory CSVs.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::graph::{build_graph, load_graph_file, GraphSpec, WeightedGraph};
use crate::laplacian::{DomainDecomposition, GraphFunction};

/// `--graph` accepts either a generator spec (`path:5`, `lattice:2:11`, ...)
/// or a path to a graph file.
pub fn load_graph(arg: &str) -> Result<WeightedGraph> {
    match GraphSpec::from_str(arg) {
        Ok(spec) => build_graph(&spec),
        Err(_) => load_graph_file(Path::new(arg)),
    }
}

/// `ball:<vertex>:<radius>` or `list:<file>`.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaSpec {
    Ball { center: String, radius: f64 },
    List(PathBuf),
}

impl FromStr for OmegaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "bad omega spec `{s}` (ball:<v>:<r> or list:<file>)"
            ))
        };
        if let Some(path) = s.strip_prefix("list:") {
            return Ok(OmegaSpec::List(PathBuf::from(path)));
        }
        let rest = s.strip_prefix("ball:").ok_or_else(bad)?;
        let (center, radius) = rest.rsplit_once(':').ok_or_else(bad)?;
        let radius: f64 = radius.parse().map_err(|_| bad())?;
        if center.is_empty() || !(radius >= 0.0) {
            return Err(bad());
        }
        Ok(OmegaSpec::Ball {
            center: center.to_string(),
            radius,
        })
    }
}

impl OmegaSpec {
    pub fn resolve(&self, g: &WeightedGraph) -> Result<DomainDecomposition> {
        match self {
            OmegaSpec::Ball { center, radius } => {
                DomainDecomposition::ball(g, g.resolve(center)?, *radius)
            }
            OmegaSpec::List(path) => {
                let text = std::fs::read_to_string(path)?;
                let ids = parse_vertex_list(g, &text)?;
                DomainDecomposition::from_vertices(g, &ids)
            }
        }
    }
}

/// Whitespace-separated vertex ids; `#` starts a comment.
pub fn parse_vertex_list(g: &WeightedGraph, text: &str) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            ids.push(g.resolve(token)?);
        }
    }
    Ok(ids)
}

/// `const:<c>`, `file:<path>` or `delta:<vertex>:<c>`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Const(f64),
    File(PathBuf),
    Delta { vertex: String, value: f64 },
}

impl FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "bad init spec `{s}` (const:<c>, file:<path> or delta:<v>:<c>)"
            ))
        };
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(InitSpec::Const(c.parse().map_err(|_| bad())?));
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(InitSpec::File(PathBuf::from(path)));
        }
        let rest = s.strip_prefix("delta:").ok_or_else(bad)?;
        let (vertex, value) = rest.rsplit_once(':').ok_or_else(bad)?;
        if vertex.is_empty() {
            return Err(bad());
        }
        Ok(InitSpec::Delta {
            vertex: vertex.to_string(),
            value: value.parse().map_err(|_| bad())?,
        })
    }
}

impl InitSpec {
    /// Values over all of V.
    pub fn values(&self, g: &WeightedGraph) -> Result<Vec<f64>> {
        match self {
            InitSpec::Const(c) => Ok(vec![*c; g.len()]),
            InitSpec::File(path) => parse_function_file(g, &std::fs::read_to_string(path)?),
            InitSpec::Delta { vertex, value } => {
                let mut v = vec![0.0; g.len()];
                v[g.resolve(vertex)?] = *value;
                Ok(v)
            }
        }
    }

    /// Initial data for a problem: restricted to the interior for Dirichlet
    /// problems, over all of V otherwise.
    pub fn build(
        &self,
        g: &WeightedGraph,
        dom: Option<&DomainDecomposition>,
    ) -> Result<GraphFunction> {
        let full = GraphFunction::on_vertices(self.values(g)?);
        Ok(match dom {
            Some(dom) => full.restrict(dom),
            None => full,
        })
    }
}

/// Function file: `a <vertex-id> <value>` lines, `#` comments; unlisted
/// vertices are 0.
pub fn parse_function_file(g: &WeightedGraph, text: &str) -> Result<Vec<f64>> {
    let mut values = vec![0.0; g.len()];
    let mut seen = vec![false; g.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let ["a", id, value] = fields.as_slice() else {
            return Err(err(format!("malformed record `{line}`")));
        };
        let x = g
            .resolve(id)
            .map_err(|_| err(format!("unknown vertex `{id}`")))?;
        if seen[x] {
            return Err(err(format!("duplicate value for vertex `{id}`")));
        }
        seen[x] = true;
        values[x] = value
            .parse()
            .map_err(|_| err(format!("expected a decimal real, got `{value}`")))?;
    }
    Ok(values)
}

/// Writes `a <id> <value>` for each listed vertex.
pub fn format_function(g: &WeightedGraph, f: &GraphFunction, vertices: &[usize]) -> String {
    let mut out = String::new();
    for &x in vertices {
        let _ = writeln!(out, "a {} {}", g.label(x), f.value(x));
    }
    out
}

pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "NA".to_string(),
    }
}

/// Trajectory CSV: header `t,dt,u_min,u_max,u_linf,J`, one row per sample and
/// a trailing `# verdict=...,T_est=...` line.
pub fn write_trajectory_csv<W: Write + ?Sized>(rec: &TrajectoryRecord, out: &mut W) -> Result<()> {
    let mut text = String::from("t,dt,u_min,u_max,u_linf,J\n");
    for s in &rec.samples {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            s.t,
            s.dt,
            s.u_min,
            s.u_max,
            s.u_linf,
            format_value(s.j)
        );
    }
    let _ = writeln!(
        text,
        "# verdict={},T_est={}",
        rec.verdict,
        format_value(rec.t_est)
    );
    out.write_all(text.as_bytes())?;
    Ok(())
}
