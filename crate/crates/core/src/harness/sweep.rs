//! Cartesian parameter sweeps over a base simulation.
//!
//! Config files are flat `key = value` lines grouped by `[section]`
//! headers; `#` starts a comment.
//!
//! ```text
//! [base]
//! graph = path:5
//! problem = dirichlet
//! omega = ball:2:1
//! alpha = 1
//! init = const:1
//! t-max = 50
//!
//! [axes]
//! init-scale = 1.0, 1.5, 2.5, 3.0
//!
//! [output]
//! dir = sweep-out
//! parallelism = 4
//! ```
//!
//! `[base]` keys are the `simulate` flags without the leading dashes.
//! Axes are `alpha`, `init-scale` and `radius`. `[criteria]` may set `m`,
//! the volume growth degree used for the Cauchy-problem criterion column.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;

use super::formats::{format_value, load_graph, write_trajectory_csv};
use super::RunParams;
use crate::criteria::{check_thm1, check_thm2, default_t_grid, CriterionVerdict};
use crate::dynamics::{integrate, Problem, SimulationConfig, Truncation, Verdict};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::nonlinearity::Nonlinearity;
use crate::spectral::{first_eigenpair, EigenPair};

pub const DEFAULT_CAP: usize = 10_000;
pub const MANIFEST_NAME: &str = "manifest.csv";
pub const THREADS_ENV: &str = "GRAPHBLOW_THREADS";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub alpha: Vec<f64>,
    pub init_scale: Vec<f64>,
    pub radius: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub base: RunParams,
    pub axes: SweepAxes,
    /// `[output] dir`; the CLI's `--out-dir` takes precedence.
    pub out_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub cap: usize,
    pub m_degree: Option<f64>,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct BaseParser {
    #[command(flatten)]
    params: RunParams,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("`{key}`: `{s}` is not a number")))
        })
        .collect()
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut base_args: Vec<String> = Vec::new();
        let mut axes = SweepAxes::default();
        let mut out_dir = None;
        let mut parallelism = None;
        let mut cap = DEFAULT_CAP;
        let mut m_degree = None;
        for (lineno, raw) in text.lines().enumerate() {
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !matches!(section.as_str(), "base" | "axes" | "output" | "criteria") {
                    return Err(err(format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| err(format!("`{key}`: `{v}` is not a number")))
            };
            match (section.as_str(), key) {
                ("base", _) => match value {
                    "true" => base_args.push(format!("--{key}")),
                    "false" => {}
                    _ => {
                        base_args.push(format!("--{key}"));
                        base_args.push(value.to_string());
                    }
                },
                ("axes", "alpha") => axes.alpha = parse_list(key, value)?,
                ("axes", "init-scale") => axes.init_scale = parse_list(key, value)?,
                ("axes", "radius") => axes.radius = parse_list(key, value)?,
                ("output", "dir") => out_dir = Some(PathBuf::from(value)),
                ("output", "parallelism") => {
                    parallelism = Some(value.parse().map_err(|_| {
                        err(format!(
                            "`parallelism`: `{value}` is not a positive integer"
                        ))
                    })?)
                }
                ("output", "cap") => {
                    cap = value
                        .parse()
                        .map_err(|_| err(format!("`cap`: `{value}` is not an integer")))?
                }
                ("criteria", "m") => m_degree = Some(number(value)?),
                ("", _) => return Err(err(format!("`{key}` outside any section"))),
                (s, k) => return Err(err(format!("unknown key `{k}` in [{s}]"))),
            }
        }
        let base = BaseParser::try_parse_from(&base_args)
            .map_err(|e| {
                let text = e.to_string();
                Error::InvalidConfig(format!(
                    "[base]: {}",
                    text.lines().next().unwrap_or("invalid").trim()
                ))
            })?
            .params;
        Ok(SweepConfig {
            base,
            axes,
            out_dir,
            parallelism: parallelism.unwrap_or_else(default_parallelism),
            cap,
            m_degree,
        })
    }

    /// Parallelism after applying the `GRAPHBLOW_THREADS` override.
    pub fn output_dir(&self) -> Result<&Path> {
        self.out_dir.as_deref().ok_or_else(|| {
            Error::InvalidConfig("no output directory: set `[output] dir` or --out-dir".into())
        })
    }

    pub fn effective_parallelism(&self) -> usize {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(self.parallelism)
            .max(1)
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        fn axis(values: &[f64]) -> Vec<Option<f64>> {
            if values.is_empty() {
                vec![None]
            } else {
                values.iter().copied().map(Some).collect()
            }
        }
        let mut points = Vec::new();
        for alpha in axis(&self.axes.alpha) {
            for init_scale in axis(&self.axes.init_scale) {
                for radius in axis(&self.axes.radius) {
                    points.push(SweepPoint {
                        index: points.len(),
                        alpha,
                        init_scale,
                        radius,
                    });
                }
            }
        }
        points
    }

    pub fn size(&self) -> usize {
        [&self.axes.alpha, &self.axes.init_scale, &self.axes.radius]
            .iter()
            .map(|a| a.len().max(1))
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub alpha: Option<f64>,
    pub init_scale: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub run: usize,
    pub file: String,
    pub alpha: Option<f64>,
    pub init_scale: f64,
    pub radius: Option<f64>,
    pub verdict: Verdict,
    pub t_est: Option<f64>,
    pub criterion: Option<String>,
    pub criterion_verdict: Option<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub rows: Vec<ManifestRow>,
}

impl RunManifest {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "run,file,alpha,init_scale,radius,verdict,T_est,criterion,criterion_verdict,wall_ms\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.run,
                r.file,
                format_value(r.alpha),
                r.init_scale,
                format_value(r.radius),
                r.verdict,
                format_value(r.t_est),
                r.criterion.as_deref().unwrap_or("NA"),
                r.criterion_verdict.as_deref().unwrap_or("NA"),
                r.wall_ms
            );
        }
        out
    }
}

struct Resolved {
    config: SimulationConfig,
    nl: Nonlinearity,
    alpha: Option<f64>,
    init_scale: f64,
    radius: Option<f64>,
}

fn resolve_point(
    g: &WeightedGraph,
    base: &RunParams,
    base_config: &SimulationConfig,
    point: &SweepPoint,
) -> Result<Resolved> {
    let alpha = point.alpha.or(base.alpha);
    let nl = Nonlinearity::from_name(&base.f, alpha)?;
    if point.alpha.is_some() && nl.alpha().is_none() {
        return Err(Error::InvalidConfig(format!(
            "alpha axis needs a power nonlinearity, base has `{}`",
            base.f
        )));
    }
    let mut config = base_config.clone();
    let init_scale = point.init_scale.unwrap_or(1.0);
    if point.init_scale.is_some() {
        config.initial = config.initial.scaled(init_scale);
    }
    if let Some(radius) = point.radius {
        let center = match (&config.problem, config.source) {
            (Problem::Cauchy { .. }, Some(center)) => center,
            _ => {
                return Err(Error::InvalidConfig(
                    "radius axis needs a cauchy problem with a source".into(),
                ))
            }
        };
        config.problem = Problem::Cauchy {
            truncation: Some(Truncation { center, radius }),
        };
    }
    let radius = match &config.problem {
        Problem::Cauchy {
            truncation: Some(tr),
        } => Some(tr.radius),
        _ => None,
    };
    config.validate(g)?;
    Ok(Resolved {
        config,
        nl,
        alpha,
        init_scale,
        radius,
    })
}

fn criterion_for(
    g: &WeightedGraph,
    eig: Option<&EigenPair>,
    m_degree: Option<f64>,
    run: &Resolved,
) -> Option<CriterionVerdict> {
    match (&run.config.problem, eig) {
        (Problem::Dirichlet(dom), Some(eig)) => {
            check_thm2(g, dom, eig, &run.nl, &run.config.initial, 1e12).ok()
        }
        (Problem::Cauchy { .. }, _) => check_thm1(&run.nl, m_degree?, &default_t_grid()).ok(),
        _ => None,
    }
}

pub fn run_file_name(index: usize) -> String {
    format!("run_{index:04}.csv")
}

/// Validates every sweep point, runs them on a pool of `parallelism`
/// workers, writes one trajectory CSV per run plus `manifest.csv`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<RunManifest> {
    let size = cfg.size();
    if size > cfg.cap {
        return Err(Error::InvalidConfig(format!(
            "sweep has {size} points, cap is {}",
            cfg.cap
        )));
    }
    let g = load_graph(&cfg.base.graph)?;
    let base_config = cfg.base.config_for(&g)?;
    let points = cfg.points();
    let resolved: Vec<Resolved> = points
        .iter()
        .map(|p| resolve_point(&g, &cfg.base, &base_config, p))
        .collect::<Result<_>>()?;
    let eig = match &base_config.problem {
        Problem::Dirichlet(dom) => Some(first_eigenpair(&g, dom)?),
        _ => None,
    };
    let out_dir = cfg.output_dir()?;
    std::fs::create_dir_all(out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_parallelism())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Vec<Result<ManifestRow>> = pool.install(|| {
        points
            .par_iter()
            .zip(resolved.par_iter())
            .map(|(point, run)| {
                let started = Instant::now();
                let rec = integrate(&g, &run.config, &run.nl)?;
                let file = run_file_name(point.index);
                let mut csv = Vec::new();
                write_trajectory_csv(&rec, &mut csv)?;
                std::fs::write(out_dir.join(&file), csv)?;
                let criterion = criterion_for(&g, eig.as_ref(), cfg.m_degree, run);
                Ok(ManifestRow {
                    run: point.index,
                    file,
                    alpha: run.alpha,
                    init_scale: run.init_scale,
                    radius: run.radius,
                    verdict: rec.verdict,
                    t_est: rec.t_est,
                    criterion: criterion.as_ref().map(|c| c.criterion.to_string()),
                    criterion_verdict: criterion.as_ref().map(|c| c.holds.to_string()),
                    wall_ms: started.elapsed().as_secs_f64() * 1e3,
                })
            })
            .collect()
    });
    let mut manifest = RunManifest {
        rows: rows.into_iter().collect::<Result<_>>()?,
    };
    manifest.rows.sort_by_key(|r| r.run);
    std::fs::write(out_dir.join(MANIFEST_NAME), manifest.to_csv())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE_VERTEX: &str = "\
[base]
graph = path:5
problem = dirichlet
omega = ball:2:1
alpha = 1
init = const:1
t-max = 50

[axes]
init-scale = 1.0, 1.5, 2.5, 3.0

[output]
dir = OUT
parallelism = 2
";

    fn config(dir: &Path, text: &str) -> SweepConfig {
        SweepConfig::parse(&text.replace("OUT", dir.to_str().unwrap())).unwrap()
    }

    #[test]
    fn single_vertex_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), SINGLE_VERTEX);
        assert_eq!(cfg.size(), 4);
        let manifest = run_sweep(&cfg).unwrap();
        let verdicts: Vec<Verdict> = manifest.rows.iter().map(|r| r.verdict).collect();
        assert_eq!(
            verdicts,
            [
                Verdict::Bounded,
                Verdict::Bounded,
                Verdict::Blowup,
                Verdict::Blowup
            ]
        );
        let crit: Vec<&str> = manifest
            .rows
            .iter()
            .map(|r| r.criterion_verdict.as_deref().unwrap())
            .collect();
        assert_eq!(crit, ["no", "no", "yes", "yes"]);
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(dir.path().join("run_0003.csv").exists());
    }

    #[test]
    fn empty_axes_give_base_run() {
        let dir = tempfile::tempdir().unwrap();
        let text = SINGLE_VERTEX.replace("init-scale = 1.0, 1.5, 2.5, 3.0", "");
        let manifest = run_sweep(&config(dir.path(), &text)).unwrap();
        assert_eq!(manifest.rows.len(), 1);
        assert_eq!(manifest.rows[0].verdict, Verdict::Bounded);
    }

    #[test]
    fn config_errors() {
        assert!(SweepConfig::parse("[base]\ngraph = path:5\n").is_err());
        assert!(SweepConfig::parse("[bogus]\n").is_err());
        assert!(SweepConfig::parse("graph = path:5\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), SINGLE_VERTEX);
        cfg.cap = 3;
        assert!(matches!(run_sweep(&cfg), Err(Error::InvalidConfig(_))));
        let bad = SINGLE_VERTEX.replace("init-scale = 1.0, 1.5, 2.5, 3.0", "init-scale = 1, -1");
        assert!(run_sweep(&config(dir.path(), &bad)).is_err());
    }
}
