//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on invalid input (one-line diagnostic on
//! stderr), 3 on I/O failure.

pub mod formats;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::criteria::{
    check_thm1, check_thm2, geometric_grid, osgood_quadrature, CriterionVerdict, Holds,
};
use crate::dynamics::{integrate, Problem, SimulationConfig, TrajectoryRecord, Truncation};
use crate::error::{Error, Result};
use crate::graph::{build_graph_with, format_graph, GraphSpec, Uniform, WeightedGraph};
use crate::heat_kernel::{HeatKernelEvaluator, KernelMethod, DEFAULT_SERIES_TOLERANCE};
use crate::nonlinearity::Nonlinearity;
use crate::spectral::first_eigenpair;

use formats::{format_function, load_graph, write_trajectory_csv, InitSpec, OmegaSpec};

#[derive(Debug, Parser)]
#[command(
    name = "graphblow",
    version,
    about = "Semilinear heat flow and blow-up on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated graph in the text graph format.
    GraphGen(GraphGenArgs),
    /// Integrate u_t = Delta u + f(u) and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Heat kernel p(t, source, .) as a `vertex,p_value` CSV.
    HeatKernel(HeatKernelArgs),
    /// First Dirichlet eigenpair of a domain.
    Eigen(EigenArgs),
    /// Evaluate the sufficient blow-up conditions.
    #[command(subcommand)]
    Criteria(CriteriaCommand),
    /// Run a parameter sweep from a config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GraphGenArgs {
    /// Generator: path:<n>, cycle:<n>, lattice:<dim>:<side>, star:<n>,
    /// complete:<n> or random:<n>:<p>:<seed>.
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Cauchy,
    Dirichlet,
}

/// Parameters of one simulation; shared by `simulate` and the `[base]`
/// section of sweep configs.
#[derive(Debug, Clone, Args)]
pub struct RunParams {
    /// Graph file, or a generator spec such as `lattice:1:401`.
    #[arg(long)]
    pub graph: String,
    #[arg(long, value_enum, default_value_t = ProblemKind::Cauchy)]
    pub problem: ProblemKind,
    /// Dirichlet domain: ball:<v>:<r> or list:<file>.
    #[arg(long)]
    pub omega: Option<String>,
    /// Truncate a Cauchy problem to the ball of this radius around --source.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Monitored vertex.
    #[arg(long)]
    pub source: Option<String>,
    /// Reaction term: power, expm1, exp or linear.
    #[arg(long = "f", default_value = "power")]
    pub f: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Initial data: const:<c>, file:<path> or delta:<v>:<c>.
    #[arg(long)]
    pub init: String,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e12)]
    pub u_blow: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt_init: f64,
    #[arg(long, default_value_t = 1e-14)]
    pub dt_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt_max: f64,
    /// Record samples at multiples of this interval.
    #[arg(long)]
    pub output_interval: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub record_stride: usize,
    /// Horizon T of the J_T(s) column for Cauchy runs (needs --source).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Keep integrating after the solution settles.
    #[arg(long)]
    pub no_steady_state: bool,
    #[arg(long, default_value_t = 20_000_000)]
    pub max_steps: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: RunParams,
    /// Trajectory CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HeatKernelArgs {
    #[arg(long)]
    graph: String,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    source: String,
    #[arg(long, default_value = "series")]
    method: String,
    #[arg(long, default_value_t = DEFAULT_SERIES_TOLERANCE)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EigenArgs {
    #[arg(long)]
    graph: String,
    #[arg(long)]
    omega: String,
    /// Function file for phi1 (printed after lambda1 when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CriteriaCommand {
    /// F(1/t) <= t^(theta/m) for large t.
    Thm1(Thm1Args),
    /// f(tau) - lambda1 tau > 0 above kappa.
    Thm2(Thm2Args),
    /// F(r) = int_r^inf dtau / f(tau).
    Osgood(OsgoodArgs),
}

#[derive(Debug, Args)]
struct Thm1Args {
    #[arg(long = "f", default_value = "power")]
    f: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// Volume growth degree.
    #[arg(long)]
    m: f64,
    #[arg(long, default_value_t = 1e2)]
    t_min: f64,
    #[arg(long, default_value_t = 1e10)]
    t_max: f64,
    #[arg(long, default_value_t = 33)]
    points: usize,
}

#[derive(Debug, Args)]
struct Thm2Args {
    #[arg(long)]
    graph: String,
    #[arg(long)]
    omega: String,
    #[arg(long = "f", default_value = "power")]
    f: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    init: String,
    #[arg(long, default_value_t = 1e12)]
    tau_max: f64,
}

#[derive(Debug, Args)]
struct OsgoodArgs {
    #[arg(long = "f", default_value = "power")]
    f: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{}", line.trim());
            return 2;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error: {message}");
            if e.is_io() {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::GraphGen(args) => graph_gen(args, stdout),
        Command::Simulate(args) => simulate(args, stdout),
        Command::HeatKernel(args) => heat_kernel(args, stdout),
        Command::Eigen(args) => eigen(args, stdout),
        Command::Criteria(cmd) => criteria(cmd, stdout),
        Command::Sweep(args) => {
            let mut cfg = sweep::SweepConfig::from_file(&args.config)?;
            if let Some(dir) = args.out_dir {
                cfg.out_dir = Some(dir);
            }
            if let Some(p) = args.parallelism {
                cfg.parallelism = p;
            }
            let manifest = sweep::run_sweep(&cfg)?;
            writeln!(
                stdout,
                "runs={} manifest={}",
                manifest.rows.len(),
                cfg.output_dir()?.join(sweep::MANIFEST_NAME).display()
            )?;
            Ok(())
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn graph_gen(args: GraphGenArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec: GraphSpec = args.spec.parse()?;
    if matches!(spec, GraphSpec::File(_)) {
        return Err(Error::InvalidGenerator(args.spec));
    }
    let g = build_graph_with(
        &spec,
        Uniform {
            mu: args.mu,
            weight: args.weight,
        },
    )?;
    emit(args.out.as_ref(), &format_graph(&g), stdout)
}

/// A validated simulation: graph, configuration and reaction term.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub graph: WeightedGraph,
    pub config: SimulationConfig,
    pub nl: Nonlinearity,
}

impl RunParams {
    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::from_name(&self.f, self.alpha)
    }

    pub fn prepare(&self) -> Result<PreparedRun> {
        let graph = load_graph(&self.graph)?;
        let config = self.config_for(&graph)?;
        Ok(PreparedRun {
            config,
            nl: self.nonlinearity()?,
            graph,
        })
    }

    pub fn config_for(&self, g: &WeightedGraph) -> Result<SimulationConfig> {
        let source = self.source.as_deref().map(|s| g.resolve(s)).transpose()?;
        let problem = match self.problem {
            ProblemKind::Dirichlet => {
                let omega: OmegaSpec = self
                    .omega
                    .as_deref()
                    .ok_or_else(|| {
                        Error::InvalidArgument("dirichlet problems need --omega".into())
                    })?
                    .parse()?;
                if self.radius.is_some() {
                    return Err(Error::InvalidArgument(
                        "--radius applies to cauchy problems".into(),
                    ));
                }
                Problem::Dirichlet(omega.resolve(g)?)
            }
            ProblemKind::Cauchy => {
                if self.omega.is_some() {
                    return Err(Error::InvalidArgument(
                        "--omega applies to dirichlet problems".into(),
                    ));
                }
                match self.radius {
                    None => Problem::cauchy(),
                    Some(radius) => Problem::Cauchy {
                        truncation: Some(Truncation {
                            center: source.ok_or_else(|| {
                                Error::InvalidArgument("--radius needs --source".into())
                            })?,
                            radius,
                        }),
                    },
                }
            }
        };
        let init: InitSpec = self.init.parse()?;
        let initial = init.build(g, problem.domain())?;
        let mut cfg = SimulationConfig::new(problem, initial);
        cfg.t_max = self.t_max;
        cfg.local_tol = self.tol;
        cfg.u_blow = self.u_blow;
        cfg.dt_init = self.dt_init;
        cfg.dt_min = self.dt_min;
        cfg.dt_max = self.dt_max;
        cfg.output_interval = self.output_interval;
        cfg.record_stride = self.record_stride;
        cfg.source = source;
        cfg.jt_horizon = self.horizon;
        cfg.steady_state = !self.no_steady_state;
        cfg.max_steps = self.max_steps;
        cfg.validate(g)?;
        Ok(cfg)
    }
}

impl PreparedRun {
    pub fn run(&self) -> Result<TrajectoryRecord> {
        integrate(&self.graph, &self.config, &self.nl)
    }
}

fn simulate(args: SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let run = args.params.prepare()?;
    let rec = run.run()?;
    let mut csv = Vec::new();
    write_trajectory_csv(&rec, &mut csv)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv)?;
            writeln!(
                stdout,
                "verdict={}\nT_est={}",
                rec.verdict,
                formats::format_value(rec.t_est)
            )?;
        }
        None => stdout.write_all(&csv)?,
    }
    Ok(())
}

fn heat_kernel(args: HeatKernelArgs, stdout: &mut dyn Write) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let method: KernelMethod = args.method.parse()?;
    let source = g.resolve(&args.source)?;
    let ev = HeatKernelEvaluator::with_tolerance(&g, method, args.tol);
    let slice = ev.kernel_slice(args.t, source)?;
    let mut text = String::from("vertex,p_value\n");
    for y in 0..g.len() {
        text.push_str(&format!("{},{}\n", g.label(y), slice.value(y)));
    }
    emit(args.out.as_ref(), &text, stdout)
}

fn eigen(args: EigenArgs, stdout: &mut dyn Write) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let omega: OmegaSpec = args.omega.parse()?;
    let dom = omega.resolve(&g)?;
    let eig = first_eigenpair(&g, &dom)?;
    writeln!(stdout, "lambda1={}", eig.lambda1)?;
    let phi = format_function(&g, &eig.phi1, dom.interior());
    match &args.out {
        Some(path) => std::fs::write(path, phi)?,
        None => stdout.write_all(phi.as_bytes())?,
    }
    Ok(())
}

fn print_verdict(v: &CriterionVerdict, stdout: &mut dyn Write) -> Result<()> {
    writeln!(stdout, "verdict={}", v.holds)?;
    writeln!(stdout, "criterion={}", v.criterion)?;
    for (k, value) in v.witness_pairs() {
        writeln!(stdout, "{k}={value}")?;
    }
    if v.probed {
        writeln!(stdout, "hypotheses=probed")?;
    }
    if v.holds == Holds::No {
        writeln!(
            stdout,
            "note=sufficient condition not established; no claim about boundedness"
        )?;
    }
    Ok(())
}

fn criteria(cmd: CriteriaCommand, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        CriteriaCommand::Thm1(args) => {
            let nl = Nonlinearity::from_name(&args.f, args.alpha)?;
            let grid = geometric_grid(args.t_min, args.t_max, args.points)?;
            print_verdict(&check_thm1(&nl, args.m, &grid)?, stdout)
        }
        CriteriaCommand::Thm2(args) => {
            let g = load_graph(&args.graph)?;
            let omega: OmegaSpec = args.omega.parse()?;
            let dom = omega.resolve(&g)?;
            let eig = first_eigenpair(&g, &dom)?;
            let nl = Nonlinearity::from_name(&args.f, args.alpha)?;
            let init: InitSpec = args.init.parse()?;
            let a = init.build(&g, Some(&dom))?;
            print_verdict(&check_thm2(&g, &dom, &eig, &nl, &a, args.tau_max)?, stdout)
        }
        CriteriaCommand::Osgood(args) => {
            let nl = Nonlinearity::from_name(&args.f, args.alpha)?;
            let quad = osgood_quadrature(&nl, args.r)?;
            let closed = nl.osgood_closed_form(args.r);
            let value = closed.unwrap_or(quad.value);
            writeln!(stdout, "F={value}")?;
            writeln!(stdout, "finite={}", value.is_finite())?;
            writeln!(
                stdout,
                "method={}",
                if closed.is_some() {
                    "closed-form"
                } else {
                    "quadrature"
                }
            )?;
            writeln!(stdout, "quadrature={}", quad.value)?;
            writeln!(stdout, "quadrature_error={}", quad.error)?;
            Ok(())
        }
    }
}
