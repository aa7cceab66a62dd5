//! Forward integration of u_t = Delta u + f(u) (Cauchy problem on a finite
//! graph or a ball truncation of it) and u_t = Delta_Omega u + f(u) with zero
//! boundary values, with finite-time blow-up detection and the monitored
//! functionals J(t) and J_T(s).
//!
//! The integrator is the Dormand-Prince 5(4) pair with per-step error control
//! in the mixed norm `max_i |err_i| / (tol (1 + |u_i|))`. Step sizes change by
//! at most x2 up and x0.25 down, and are floored at `dt_min`; a step at the
//! floor is accepted even when its error estimate exceeds the tolerance.
//! A run is declared blown up once `max |u| >= u_blow` on a step taken at the
//! floor.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::heat_kernel::{HeatKernelEvaluator, KernelMethod};
use crate::laplacian::{DomainDecomposition, GraphFunction, RestrictedLaplacian, Support};
use crate::nonlinearity::Nonlinearity;
use crate::spectral::{first_eigenpair, EigenPair};

/// Ball truncation B(center, radius) of a Cauchy problem, closed by zero
/// values outside the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub center: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Cauchy { truncation: Option<Truncation> },
    Dirichlet(DomainDecomposition),
}

impl Problem {
    pub fn cauchy() -> Self {
        Problem::Cauchy { truncation: None }
    }

    pub fn truncated(center: usize, radius: f64) -> Self {
        Problem::Cauchy {
            truncation: Some(Truncation { center, radius }),
        }
    }

    /// Vertices that evolve; every other vertex is held at zero.
    pub fn active_vertices(&self, g: &WeightedGraph) -> Result<Vec<usize>> {
        match self {
            Problem::Cauchy { truncation: None } => Ok((0..g.len()).collect()),
            Problem::Cauchy {
                truncation: Some(tr),
            } => g.ball(tr.center, tr.radius),
            Problem::Dirichlet(dom) => Ok(dom.interior().to_vec()),
        }
    }

    pub fn domain(&self) -> Option<&DomainDecomposition> {
        match self {
            Problem::Dirichlet(dom) => Some(dom),
            Problem::Cauchy { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub problem: Problem,
    pub t_max: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub local_tol: f64,
    pub u_blow: f64,
    pub initial: GraphFunction,
    /// Vertex nu whose value is recorded (and the base point of J_T).
    pub source: Option<usize>,
    /// Horizon T of J_T(s); requires `source` and a Cauchy problem.
    pub jt_horizon: Option<f64>,
    /// Record every `record_stride`-th accepted step.
    pub record_stride: usize,
    /// When set, record exactly at multiples of this interval instead.
    pub output_interval: Option<f64>,
    pub record_states: bool,
    /// Stop with a `Bounded` verdict once `|rhs|_inf <= 1e-10 (1 + |u|_inf)`.
    pub steady_state: bool,
    /// Track J(t) for Dirichlet problems (needs the first eigenpair).
    pub track_j: bool,
    pub max_steps: usize,
}

impl SimulationConfig {
    pub fn new(problem: Problem, initial: GraphFunction) -> Self {
        SimulationConfig {
            problem,
            t_max: 10.0,
            dt_init: 1e-3,
            dt_min: 1e-14,
            dt_max: 0.1,
            local_tol: 1e-8,
            u_blow: 1e12,
            initial,
            source: None,
            jt_horizon: None,
            record_stride: 1,
            output_interval: None,
            record_states: false,
            steady_state: true,
            track_j: true,
            max_steps: 20_000_000,
        }
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("t_max", self.t_max)?;
        positive("dt_init", self.dt_init)?;
        positive("dt_min", self.dt_min)?;
        positive("dt_max", self.dt_max)?;
        positive("local_tol", self.local_tol)?;
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad(format!(
                "need dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.u_blow >= 1e6) {
            return bad(format!("u_blow must be >= 1e6, got {}", self.u_blow));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive".into());
        }
        if let Some(dt) = self.output_interval {
            positive("output_interval", dt)?;
        }
        if let Some(nu) = self.source {
            g.check_vertex(nu)?;
        }
        if let Problem::Cauchy {
            truncation: Some(tr),
        } = &self.problem
        {
            g.check_vertex(tr.center)?;
            if !(tr.radius >= 0.0) {
                return bad(format!("truncation radius must be >= 0, got {}", tr.radius));
            }
        }
        if let Some(horizon) = self.jt_horizon {
            positive("jt_horizon", horizon)?;
            if self.source.is_none() || self.problem.domain().is_some() {
                return bad("J_T needs a source vertex and a Cauchy problem".into());
            }
        }
        if self.initial.len() != g.len() {
            return Err(Error::SupportMismatch(format!(
                "initial data has {} values, graph has {} vertices",
                self.initial.len(),
                g.len()
            )));
        }
        let active = self.problem.active_vertices(g)?;
        if let Some(dom) = self.problem.domain() {
            if let Some(x) =
                (0..g.len()).find(|&x| !dom.contains_interior(x) && self.initial.value(x) != 0.0)
            {
                return Err(Error::SupportMismatch(format!(
                    "initial data is non-zero at vertex {x}, outside the domain interior"
                )));
            }
        }
        let mut nontrivial = false;
        for &x in &active {
            let a = self.initial.value(x);
            if !a.is_finite() {
                return bad(format!("initial data is not finite at vertex {x}"));
            }
            if a < 0.0 {
                return bad(format!("initial data is negative at vertex {x}"));
            }
            nontrivial |= a > 0.0;
        }
        if !nontrivial {
            return Err(Error::TrivialInitialData);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Blowup,
    Bounded,
    Horizon,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Blowup => "blowup",
            Verdict::Bounded => "bounded",
            Verdict::Horizon => "horizon",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Step that produced this sample (0 for the initial sample).
    pub dt: f64,
    /// Sum of the step lengths since the previous sample. Unlike differences
    /// of `t` it is not rounded to the resolution of the clock.
    pub elapsed: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub u_linf: f64,
    /// J(t) for Dirichlet runs, J_T(t) for Cauchy runs with a horizon.
    pub j: Option<f64>,
    pub u_source: Option<f64>,
    /// Zero-extended state over V, when states are recorded.
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub verdict: Verdict,
    pub t_est: Option<f64>,
    /// int_{u_blow}^inf dtau / f(tau), when F has a closed form.
    pub t_uncertainty: Option<f64>,
    /// The state overflowed to a non-finite value before the threshold test.
    pub overflow: bool,
    pub lambda1: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub forced_steps: usize,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least one sample")
    }
}

/// Right-hand side of the semi-discrete system on an active vertex set.
struct System<'a> {
    op: RestrictedLaplacian,
    nl: &'a Nonlinearity,
}

impl System<'_> {
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        self.op.apply(y, out);
        for (o, &u) in out.iter_mut().zip(y) {
            *o += self.nl.f(u);
        }
    }
}

/// Delta u + f(u) (or Delta_Omega u + f(u)) on the problem's active set,
/// zero elsewhere.
pub fn step_rhs(
    g: &WeightedGraph,
    state: &GraphFunction,
    nl: &Nonlinearity,
    problem: &Problem,
) -> Result<GraphFunction> {
    if state.len() != g.len() {
        return Err(Error::SupportMismatch(
            "state length differs from graph".into(),
        ));
    }
    match (problem, state.support()) {
        (Problem::Dirichlet(dom), Support::Interior(ids)) if ids[..] == dom.interior()[..] => {}
        (Problem::Cauchy { .. }, Support::Vertices) => {}
        _ => {
            return Err(Error::SupportMismatch(
                "state support does not match the problem domain".into(),
            ))
        }
    }
    let active = problem.active_vertices(g)?;
    let sys = System {
        op: RestrictedLaplacian::on_active(g, &active),
        nl,
    };
    let y: Vec<f64> = active.iter().map(|&x| state.value(x)).collect();
    let mut out = vec![0.0; y.len()];
    sys.eval(&y, &mut out);
    let mut full = vec![0.0; g.len()];
    for (&x, v) in active.iter().zip(out) {
        full[x] = v;
    }
    Ok(match problem {
        Problem::Dirichlet(dom) => GraphFunction::on_interior(g, dom, &out_interior(dom, &full))?,
        Problem::Cauchy { .. } => GraphFunction::on_vertices(full),
    })
}

fn out_interior(dom: &DomainDecomposition, full: &[f64]) -> Vec<f64> {
    dom.interior().iter().map(|&x| full[x]).collect()
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_GROWTH: f64 = 2.0;
const MAX_SHRINK: f64 = 0.25;
const SAFETY: f64 = 0.9;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }

    /// One trial step from y (with k[0] = rhs(y) already set). Fills y_new,
    /// k[6] = rhs(y_new) and returns the scaled error norm.
    fn attempt(&mut self, sys: &System<'_>, y: &[f64], h: f64, tol: f64) -> f64 {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.eval(tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.eval(tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.eval(tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.eval(tmp, k5);
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.eval(tmp, k6);
        for i in 0..n {
            self.y_new[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        sys.eval(&self.y_new, k7);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol * (1.0 + y[i].abs().max(self.y_new[i].abs()));
            let ratio = e.abs() / scale;
            if ratio.is_nan() {
                return f64::NAN;
            }
            err = err.max(ratio);
        }
        err
    }
}

/// Smallest usable step at time t: `dt_min`, raised to two ulps of t when
/// `dt_min` would no longer advance the clock.
fn step_floor(t: f64, dt_min: f64) -> f64 {
    let ulp = t.abs().next_up() - t.abs();
    dt_min.max(2.0 * ulp)
}

struct Recorder<'a> {
    g: &'a WeightedGraph,
    active: &'a [usize],
    config: &'a SimulationConfig,
    eig: Option<&'a EigenPair>,
    kernel: Option<HeatKernelEvaluator<'a>>,
    samples: Vec<Sample>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, dt: f64, elapsed: f64, y: &[f64]) -> Result<()> {
        let mut u_min = f64::INFINITY;
        let mut u_max = f64::NEG_INFINITY;
        let mut u_linf: f64 = 0.0;
        for &v in y {
            u_min = u_min.min(v);
            u_max = u_max.max(v);
            u_linf = u_linf.max(v.abs());
        }
        let needs_full = self.config.record_states || self.kernel.is_some();
        let full = if needs_full {
            let mut full = vec![0.0; self.g.len()];
            for (&x, &v) in self.active.iter().zip(y) {
                full[x] = v;
            }
            Some(full)
        } else {
            None
        };
        let j = if let Some(eig) = self.eig {
            Some(
                self.active
                    .iter()
                    .zip(y)
                    .map(|(&x, &u)| self.g.mu(x) * u * eig.phi1.value(x))
                    .sum(),
            )
        } else if let (Some(kernel), Some(horizon), Some(nu)) =
            (&self.kernel, self.config.jt_horizon, self.config.source)
        {
            if t < horizon && u_linf.is_finite() {
                let state = full.as_ref().unwrap();
                Some(kernel.apply_values(horizon - t, state)?[nu])
            } else {
                None
            }
        } else {
            None
        };
        let u_source = self
            .config
            .source
            .map(|nu| self.active.binary_search(&nu).map(|k| y[k]).unwrap_or(0.0));
        self.samples.push(Sample {
            t,
            dt,
            elapsed,
            u_min,
            u_max,
            u_linf,
            j,
            u_source,
            state: if self.config.record_states {
                full
            } else {
                None
            },
        });
        Ok(())
    }
}

/// Integrates the configured problem until blow-up, a steady state or the
/// horizon `t_max`.
pub fn integrate(
    g: &WeightedGraph,
    config: &SimulationConfig,
    nl: &Nonlinearity,
) -> Result<TrajectoryRecord> {
    config.validate(g)?;
    if nl.is_custom() {
        probe_custom(nl, config.u_blow)?;
    }
    let active = config.problem.active_vertices(g)?;
    let sys = System {
        op: RestrictedLaplacian::on_active(g, &active),
        nl,
    };
    let eig = match (&config.problem, config.track_j) {
        (Problem::Dirichlet(dom), true) => Some(first_eigenpair(g, dom)?),
        _ => None,
    };
    let kernel = config
        .jt_horizon
        .map(|_| HeatKernelEvaluator::new(g, KernelMethod::Series));
    let mut recorder = Recorder {
        g,
        active: &active,
        config,
        eig: eig.as_ref(),
        kernel,
        samples: Vec::new(),
    };
    // Negative excursions only signal trouble when f(0) >= 0 keeps solutions
    // non-negative.
    let guard_sign = nl.f(0.0) >= 0.0;
    let neg_limit = -10.0 * config.local_tol;

    let n = active.len();
    let mut y: Vec<f64> = active.iter().map(|&x| config.initial.value(x)).collect();
    let mut stages = Stages::new(n);
    sys.eval(&y, &mut stages.k[0]);
    recorder.record(0.0, 0.0, 0.0, &y)?;

    let mut t = 0.0f64;
    let mut dt = config.dt_init;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut forced = 0usize;
    let mut next_output = config.output_interval.map(|dt| (1usize, dt));
    let mut last_recorded = true;
    let mut overflow = false;
    let mut last_h = 0.0;
    let mut elapsed = 0.0;

    let verdict;
    let mut t_est = None;
    loop {
        if t >= config.t_max {
            verdict = Verdict::Horizon;
            break;
        }
        if accepted + rejected >= config.max_steps {
            return Err(Error::StepLimit(config.max_steps));
        }
        let floor = step_floor(t, config.dt_min);
        let mut h = dt.min(config.dt_max).max(floor);
        let mut land = None;
        if config.t_max - t <= h {
            h = config.t_max - t;
            land = Some(config.t_max);
        }
        if let Some((k, interval)) = next_output {
            let target = k as f64 * interval;
            if target - t <= h {
                h = target - t;
                land = Some(target);
            }
        }

        let err = stages.attempt(&sys, &y, h, config.local_tol);
        let at_floor = h <= floor * (1.0 + 1e-9);
        let finite = err.is_finite() && stages.y_new.iter().all(|v| v.is_finite());
        if !finite {
            if at_floor {
                // Overflow on a floor step: the solution escaped before the
                // threshold test could see it.
                overflow = true;
                t += h;
                accepted += 1;
                forced += 1;
                let mut u_linf: f64 = 0.0;
                let mut u_min = f64::INFINITY;
                let mut u_max = f64::NEG_INFINITY;
                for (i, v) in stages.y_new.iter().enumerate() {
                    let v = if v.is_finite() { *v } else { f64::INFINITY };
                    y[i] = v;
                    u_min = u_min.min(v);
                    u_max = u_max.max(v);
                    u_linf = u_linf.max(v.abs());
                }
                recorder.samples.push(Sample {
                    t,
                    dt: h,
                    elapsed: elapsed + h,
                    u_min,
                    u_max,
                    u_linf,
                    j: None,
                    u_source: None,
                    state: None,
                });
                verdict = Verdict::Blowup;
                t_est = Some(t);
                break;
            }
            rejected += 1;
            dt = (h * MAX_SHRINK).max(floor);
            continue;
        }
        if err > 1.0 && !at_floor {
            rejected += 1;
            let factor = (SAFETY * err.powf(-0.2)).clamp(MAX_SHRINK, 1.0);
            dt = (h * factor).max(floor);
            continue;
        }

        // Accept.
        if err > 1.0 {
            forced += 1;
        }
        accepted += 1;
        last_h = h;
        elapsed += h;
        t = match land {
            Some(target) => target,
            None => t + h,
        };
        std::mem::swap(&mut y, &mut stages.y_new);
        stages.k.swap(0, 6);

        let factor = if err == 0.0 {
            MAX_GROWTH
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MAX_SHRINK, MAX_GROWTH)
        };
        // A step shortened to land on an output time keeps the previous proposal.
        let proposal = if land.is_some() && h < dt {
            dt
        } else {
            h * factor
        };
        dt = proposal.clamp(step_floor(t, config.dt_min), config.dt_max);

        let mut u_linf: f64 = 0.0;
        let mut u_min = f64::INFINITY;
        for &v in &y {
            u_linf = u_linf.max(v.abs());
            u_min = u_min.min(v);
        }
        if guard_sign && u_min < neg_limit {
            return Err(Error::Integrity(format!(
                "solution went negative ({u_min:e}) at t = {t}"
            )));
        }

        let on_grid = match next_output {
            Some((k, interval)) if land == Some(k as f64 * interval) => {
                next_output = Some((k + 1, interval));
                true
            }
            _ => false,
        };
        let record_now = if config.output_interval.is_some() {
            on_grid
        } else {
            accepted.is_multiple_of(config.record_stride)
        };
        if record_now {
            recorder.record(t, h, elapsed, &y)?;
            elapsed = 0.0;
        }
        last_recorded = record_now;

        if u_linf >= config.u_blow && at_floor {
            verdict = Verdict::Blowup;
            t_est = Some(t);
            break;
        }
        if config.steady_state {
            let rhs_norm = stages.k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rhs_norm <= 1e-10 * (1.0 + u_linf) {
                verdict = Verdict::Bounded;
                break;
            }
        }
    }
    if !last_recorded && !overflow {
        recorder.record(t, last_h, elapsed, &y)?;
    }

    let t_uncertainty = match verdict {
        Verdict::Blowup => nl.osgood_closed_form(config.u_blow),
        _ => None,
    };
    Ok(TrajectoryRecord {
        samples: recorder.samples,
        verdict,
        t_est,
        t_uncertainty,
        overflow,
        lambda1: eig.map(|e| e.lambda1),
        accepted_steps: accepted,
        rejected_steps: rejected,
        forced_steps: forced,
    })
}

/// Rejects custom reaction terms that are not finite on [0, u_blow].
fn probe_custom(nl: &Nonlinearity, u_blow: f64) -> Result<()> {
    let points = 2000;
    for i in 0..=points {
        let tau = if i == 0 {
            0.0
        } else {
            // Log-spaced from 1e-6 to u_blow.
            1e-6 * (u_blow / 1e-6).powf((i - 1) as f64 / (points - 1) as f64)
        };
        let v = nl.f(tau);
        if !v.is_finite() {
            return Err(Error::Nonlinearity(format!(
                "{nl} is not finite at {tau} (probe grid [0, {u_blow}])"
            )));
        }
    }
    Ok(())
}

/// J = sum over the interior of mu u phi1.
pub fn functional_j(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    eig: &EigenPair,
    state: &GraphFunction,
) -> Result<f64> {
    match state.support() {
        Support::Interior(ids) if ids[..] == dom.interior()[..] => {}
        _ => {
            return Err(Error::SupportMismatch(
                "J needs a state on the domain interior".into(),
            ))
        }
    }
    Ok(dom
        .interior()
        .iter()
        .map(|&x| g.mu(x) * state.value(x) * eig.phi1.value(x))
        .sum())
}

/// J_T(s) = sum_x mu(x) p(T - s, nu, x) u(s, x) = (P_{T-s} u)(nu).
pub fn functional_jt(
    ev: &HeatKernelEvaluator<'_>,
    nu: usize,
    horizon: f64,
    s: f64,
    state: &GraphFunction,
) -> Result<f64> {
    ev.graph().check_vertex(nu)?;
    if !(s >= 0.0 && s < horizon) {
        return Err(Error::InvalidArgument(format!(
            "J_T needs 0 <= s < T, got s = {s}, T = {horizon}"
        )));
    }
    Ok(ev.apply_values(horizon - s, state.values())?[nu])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JInequalityReport {
    /// max over sample pairs of max(RHS - J', 0).
    pub max_violation: f64,
    /// max over sample pairs of max(RHS - J', 0) / (1 + |RHS|).
    pub max_relative: f64,
    pub pairs: usize,
}

/// Difference quotients of J between consecutive samples, paired with the
/// midpoint value of J. The time between samples is taken from
/// [`Sample::elapsed`].
pub fn j_difference_quotients(record: &TrajectoryRecord) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    let mut gap = 0.0;
    for s in &record.samples {
        gap += s.elapsed;
        let Some(j) = s.j.filter(|j| j.is_finite()) else {
            continue;
        };
        if let Some(j0) = prev {
            out.push(((j - j0) / gap, 0.5 * (j0 + j)));
        }
        prev = Some(j);
        gap = 0.0;
    }
    out
}

/// Compares difference quotients of J with -lambda1 J + f(J) at the
/// midpoint value of J.
pub fn check_j_inequality(
    record: &TrajectoryRecord,
    lambda1: f64,
    nl: &Nonlinearity,
) -> Result<JInequalityReport> {
    let pairs = j_difference_quotients(record);
    if pairs.len() + 1 < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: pairs.len() + 1,
        });
    }
    let mut max_violation: f64 = 0.0;
    let mut max_relative: f64 = 0.0;
    for &(derivative, mid) in &pairs {
        let rhs = -lambda1 * mid + nl.f(mid);
        let violation = (rhs - derivative).max(0.0);
        max_violation = max_violation.max(violation);
        max_relative = max_relative.max(violation / (1.0 + rhs.abs()));
    }
    Ok(JInequalityReport {
        max_violation,
        max_relative,
        pairs: pairs.len(),
    })
}

/// max over shared sample times and vertices of (u_lower - u_upper).
///
/// Both runs must have recorded states on a common grid (use the same
/// `output_interval`); only their terminal samples may fall off it.
pub fn check_comparison(upper: &TrajectoryRecord, lower: &TrajectoryRecord) -> Result<f64> {
    let shared = upper.samples.len().min(lower.samples.len());
    let mut violation = f64::NEG_INFINITY;
    let mut compared = 0;
    for k in 0..shared {
        let (su, sl) = (&upper.samples[k], &lower.samples[k]);
        if su.t != sl.t {
            let terminal = k + 1 == upper.samples.len() || k + 1 == lower.samples.len();
            if terminal {
                break;
            }
            return Err(Error::MismatchedGrids(format!(
                "sample {k} at t = {} vs t = {}",
                su.t, sl.t
            )));
        }
        let (Some(xu), Some(xl)) = (&su.state, &sl.state) else {
            return Err(Error::MismatchedGrids("runs did not record states".into()));
        };
        if xu.len() != xl.len() {
            return Err(Error::MismatchedGrids("state dimensions differ".into()));
        }
        for (a, b) in xu.iter().zip(xl) {
            if a.is_finite() && b.is_finite() {
                violation = violation.max(b - a);
            }
        }
        compared += 1;
    }
    if compared == 0 {
        return Err(Error::MismatchedGrids("no shared sample times".into()));
    }
    Ok(violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};

    fn single_vertex() -> (WeightedGraph, DomainDecomposition) {
        let g = build_graph(&GraphSpec::Path(5)).unwrap();
        let dom = DomainDecomposition::ball(&g, 2, 1.0).unwrap();
        assert_eq!(dom.interior(), &[2]);
        (g, dom)
    }

    fn single_vertex_config(a: f64) -> (WeightedGraph, SimulationConfig) {
        let (g, dom) = single_vertex();
        let init = GraphFunction::on_interior(&g, &dom, &[a]).unwrap();
        let mut cfg = SimulationConfig::new(Problem::Dirichlet(dom), init);
        cfg.t_max = 50.0;
        (g, cfg)
    }

    #[test]
    fn rhs_examples() {
        let (g, dom) = single_vertex();
        let nl = Nonlinearity::power(1.0).unwrap();
        let state = GraphFunction::on_interior(&g, &dom, &[3.0]).unwrap();
        let rhs = step_rhs(&g, &state, &nl, &Problem::Dirichlet(dom.clone())).unwrap();
        assert_eq!(rhs.value(2), 3.0);

        let zero = GraphFunction::on_interior(&g, &dom, &[0.0]).unwrap();
        let rhs = step_rhs(&g, &zero, &nl, &Problem::Dirichlet(dom.clone())).unwrap();
        assert_eq!(rhs.value(2), 0.0);

        let cycle = build_graph(&GraphSpec::Cycle(7)).unwrap();
        let c = GraphFunction::constant(&cycle, 1.7);
        for nl in [Nonlinearity::exp(), Nonlinearity::power(0.5).unwrap()] {
            let rhs = step_rhs(&cycle, &c, &nl, &Problem::cauchy()).unwrap();
            for x in 0..7 {
                assert_eq!(rhs.value(x), nl.f(1.7));
            }
        }
        let full = GraphFunction::constant(&g, 1.0);
        assert!(step_rhs(&g, &full, &nl, &Problem::Dirichlet(dom)).is_err());
    }

    #[test]
    fn single_vertex_blowup_time() {
        let (g, cfg) = single_vertex_config(3.0);
        let nl = Nonlinearity::power(1.0).unwrap();
        let rec = integrate(&g, &cfg, &nl).unwrap();
        assert_eq!(rec.verdict, Verdict::Blowup);
        let exact = 0.5 * 3f64.ln();
        let t_est = rec.t_est.unwrap();
        assert!((t_est - exact).abs() <= 1e-3 * exact, "{t_est} vs {exact}");
        let last = rec.last();
        assert!(last.u_linf >= cfg.u_blow);
        assert!(last.dt <= cfg.dt_min * (1.0 + 1e-9));
        assert!(rec.samples.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn single_vertex_decay() {
        let (g, cfg) = single_vertex_config(1.0);
        let nl = Nonlinearity::power(1.0).unwrap();
        let rec = integrate(&g, &cfg, &nl).unwrap();
        assert_eq!(rec.verdict, Verdict::Bounded);
        assert!(rec.last().u_max < 1e-9);
    }

    #[test]
    fn trivial_data_rejected() {
        let (g, cfg) = single_vertex_config(0.0);
        let nl = Nonlinearity::power(1.0).unwrap();
        assert!(matches!(
            integrate(&g, &cfg, &nl),
            Err(Error::TrivialInitialData)
        ));
    }

    #[test]
    fn invalid_configs_rejected() {
        let nl = Nonlinearity::power(1.0).unwrap();
        let (g, mut cfg) = single_vertex_config(1.0);
        cfg.dt_min = 1.0;
        assert!(matches!(
            integrate(&g, &cfg, &nl),
            Err(Error::InvalidConfig(_))
        ));
        let (g, mut cfg) = single_vertex_config(1.0);
        cfg.u_blow = 10.0;
        assert!(matches!(
            integrate(&g, &cfg, &nl),
            Err(Error::InvalidConfig(_))
        ));
        let (g, mut cfg) = single_vertex_config(1.0);
        cfg.initial = GraphFunction::on_vertices(vec![0.0, 0.0, -1.0, 0.0, 0.0]);
        assert!(matches!(
            integrate(&g, &cfg, &nl),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn equilibrium_stays_put() {
        let (g, mut cfg) = single_vertex_config(2.0);
        cfg.steady_state = false;
        cfg.t_max = 10.0;
        let rec = integrate(&g, &cfg, &Nonlinearity::power(1.0).unwrap()).unwrap();
        assert_eq!(rec.verdict, Verdict::Horizon);
        assert!(rec.samples.iter().all(|s| (s.u_max - 2.0).abs() <= 1e-6));
    }

    #[test]
    fn custom_nonlinearity_probe() {
        let (g, cfg) = single_vertex_config(1.0);
        let bad =
            Nonlinearity::custom("blows", std::sync::Arc::new(|u: f64| (u * 1e3).exp()), None);
        assert!(matches!(
            integrate(&g, &cfg, &bad),
            Err(Error::Nonlinearity(_))
        ));
        let cube = Nonlinearity::custom("cube", std::sync::Arc::new(|u: f64| u * u * u), None);
        let rec = integrate(&g, &cfg, &cube).unwrap();
        assert_eq!(rec.verdict, Verdict::Bounded);
    }

    #[test]
    fn output_grid_is_exact() {
        let (g, mut cfg) = single_vertex_config(1.0);
        cfg.output_interval = Some(0.25);
        cfg.t_max = 2.0;
        cfg.steady_state = false;
        let rec = integrate(&g, &cfg, &Nonlinearity::power(1.0).unwrap()).unwrap();
        let times: Vec<f64> = rec.samples.iter().map(|s| s.t).collect();
        let expected: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
        assert_eq!(times, expected);
    }

    #[test]
    fn functional_values() {
        let g = build_graph(&GraphSpec::Path(6)).unwrap();
        let dom = DomainDecomposition::from_vertices(&g, &[1, 2, 3, 4]).unwrap();
        let eig = first_eigenpair(&g, &dom).unwrap();
        let u = GraphFunction::on_interior(&g, &dom, &[2.0, 4.0]).unwrap();
        assert!((functional_j(&g, &dom, &eig, &u).unwrap() - 3.0).abs() < 1e-14);
        let zero = GraphFunction::on_interior(&g, &dom, &[0.0, 0.0]).unwrap();
        assert_eq!(functional_j(&g, &dom, &eig, &zero).unwrap(), 0.0);

        let two = build_graph(&GraphSpec::Path(2)).unwrap();
        let ev = HeatKernelEvaluator::new(&two, KernelMethod::Series);
        let s = GraphFunction::on_vertices(vec![1.0, 0.0]);
        let jt = functional_jt(&ev, 0, 1.5, 0.5, &s).unwrap();
        assert!((jt - (1.0 + (-2.0f64).exp()) / 2.0).abs() < 1e-12);
        let c = GraphFunction::constant(&two, 4.0);
        assert!((functional_jt(&ev, 1, 2.0, 0.0, &c).unwrap() - 4.0).abs() < 1e-12);
        assert!(functional_jt(&ev, 0, 1.0, 1.0, &s).is_err());
    }
}
