//! Osgood integral F(r) = int_r^inf dtau / f(tau) and the sufficient blow-up
//! conditions evaluated against it.
//!
//! Every verdict is one-directional: `Holds::No` means the sufficient
//! condition was not established, never that solutions stay bounded.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::laplacian::{DomainDecomposition, GraphFunction};
use crate::nonlinearity::{Hypotheses, Nonlinearity, NonlinearityKind};
use crate::spectral::EigenPair;

/// Upper end of the hypothesis probe grid.
pub const PROBE_MAX: f64 = 1e6;
const PROBE_POINTS: usize = 400;
const QUAD_REL_TOL: f64 = 1e-13;
const MAX_PIECES: usize = 64;
const MAX_BISECTIONS: usize = 40;
const DIVERGENCE_RATIO: f64 = 1.0 - 1e-6;
const HARMONIC_CUTOFF: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsgoodReport {
    pub finite: bool,
    /// Sampled (r, F(r)) pairs.
    pub f_at: Vec<(f64, f64)>,
    pub method: OsgoodMethod,
    pub quadrature_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// F(r), in closed form when the reaction term has one.
pub fn osgood_f(nl: &Nonlinearity, r: f64) -> Result<f64> {
    check_r(r)?;
    match nl.osgood_closed_form(r) {
        Some(v) => Ok(v),
        None => Ok(osgood_quadrature(nl, r)?.value),
    }
}

/// F evaluated at each of `rs`.
pub fn osgood_report(nl: &Nonlinearity, rs: &[f64]) -> Result<OsgoodReport> {
    let closed = nl.osgood_closed_form(1.0).is_some();
    let mut f_at = Vec::with_capacity(rs.len());
    let mut worst: f64 = 0.0;
    for &r in rs {
        check_r(r)?;
        let v = if closed {
            nl.osgood_closed_form(r).unwrap()
        } else {
            let q = osgood_quadrature(nl, r)?;
            worst = worst.max(q.error);
            q.value
        };
        f_at.push((r, v));
    }
    Ok(OsgoodReport {
        finite: f_at.iter().all(|(_, v)| v.is_finite()),
        f_at,
        method: if closed {
            OsgoodMethod::ClosedForm
        } else {
            OsgoodMethod::Quadrature
        },
        quadrature_error: (!closed).then_some(worst),
    })
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "Osgood integral needs r > 0, got {r}"
        )))
    }
}

/// Adaptive Gauss-Kronrod quadrature of F(r) after the substitution
/// tau = r + (1 - q) / q, q in (0, 1], integrand 1 / (q^2 f(tau)).
///
/// The interval is split into dyadic pieces q in [2^-(k+1), 2^-k]. Once the
/// piece integrals decay geometrically the remainder is extrapolated from
/// their ratio; a ratio that does not fall below one signals divergence and
/// yields +inf.
pub fn osgood_quadrature(nl: &Nonlinearity, r: f64) -> Result<Quadrature> {
    check_r(r)?;
    let integrand = |q: f64| -> Result<f64> {
        let tau = r + (1.0 - q) / q;
        let f = nl.f(tau);
        if f.is_nan() || f <= 0.0 {
            return Err(Error::Nonlinearity(format!(
                "{nl} is not positive at tau = {tau}; F({r}) is undefined"
            )));
        }
        Ok(1.0 / (q * q * f))
    };
    let mut total = 0.0;
    let mut error = 0.0;
    let mut prev: Option<f64> = None;
    let mut ratios: Vec<f64> = Vec::new();
    for k in 0..MAX_PIECES {
        let hi = 0.5f64.powi(k as i32);
        let lo = 0.5 * hi;
        let piece = adaptive(&integrand, lo, hi, MAX_BISECTIONS)?;
        total += piece.value;
        error += piece.error;
        if let Some(p) = prev {
            if p > 0.0 {
                ratios.push(piece.value / p);
            }
        }
        prev = Some(piece.value);
        if piece.value == 0.0 || piece.value <= 1e-17 * total && k >= 8 {
            return Ok(Quadrature {
                value: total,
                error,
            });
        }
        if ratios.len() >= 4 {
            let recent = &ratios[ratios.len() - 4..];
            let rho = recent[3];
            let steady = recent
                .windows(2)
                .all(|w| (w[1] - w[0]).abs() <= 1e-6 * w[1].abs().max(1e-300));
            if steady {
                if rho >= DIVERGENCE_RATIO {
                    return Ok(Quadrature {
                        value: f64::INFINITY,
                        error: f64::INFINITY,
                    });
                }
                let tail = piece.value * rho / (1.0 - rho);
                let drift = (recent[3] - recent[2]).abs();
                if tail <= QUAD_REL_TOL * total || k + 1 == MAX_PIECES {
                    let tail_err = tail * drift / (1.0 - rho) + 1e-16 * total;
                    return Ok(Quadrature {
                        value: total + tail,
                        error: error + tail_err,
                    });
                }
            }
        }
    }
    // Piece integrals that never settle into geometric decay: model them as
    // p_k ~ k^-s. s <= 1 diverges, and decay this close to harmonic is
    // treated as divergent too; otherwise the remainder is about
    // p_K K / (s - 1).
    let pieces = piece_values(&ratios, prev.unwrap_or(0.0));
    let k = MAX_PIECES as f64;
    let s = -(pieces[1] / pieces[0]).ln() / (k / (k - 8.0)).ln();
    if !(s > HARMONIC_CUTOFF) {
        return Ok(Quadrature {
            value: f64::INFINITY,
            error: f64::INFINITY,
        });
    }
    let tail = pieces[1] * k / (s - 1.0);
    Ok(Quadrature {
        value: total + tail,
        error: error + tail,
    })
}

/// Piece integrals 8 pieces before the last, and the last one, recovered
/// from the ratio history.
fn piece_values(ratios: &[f64], last: f64) -> [f64; 2] {
    let back: f64 = ratios[ratios.len() - 8..].iter().product();
    [last / back, last]
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<Quadrature> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx)? + f(c + dx)?;
        kronrod += K15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    Ok(Quadrature {
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    })
}

fn adaptive<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, depth: usize) -> Result<Quadrature> {
    let whole = gauss_kronrod(f, a, b)?;
    if depth == 0 || whole.error <= QUAD_REL_TOL * whole.value.abs() || whole.error < 1e-300 {
        return Ok(whole);
    }
    let m = 0.5 * (a + b);
    let left = adaptive(f, a, m, depth - 1)?;
    let right = adaptive(f, m, b, depth - 1)?;
    Ok(Quadrature {
        value: left.value + right.value,
        error: left.error + right.error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// F(1/t) <= t^(theta/m) for large t, general reaction term.
    Thm1,
    /// f(tau) - lambda1 tau > 0 for tau > kappa, general reaction term.
    Thm2,
    /// Power case of `Thm1`: m alpha < 1.
    Cor1,
    /// Power case of `Thm2`: kappa > lambda1^(1/alpha).
    Rmk2,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Thm1 => "thm1",
            Criterion::Thm2 => "thm2",
            Criterion::Cor1 => "cor1",
            Criterion::Rmk2 => "rmk2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Holds {
    Yes,
    No,
    Inconclusive,
}

impl fmt::Display for Holds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Holds::Yes => "yes",
            Holds::No => "no",
            Holds::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Witness {
    pub theta: Option<f64>,
    pub t_range: Option<(f64, f64)>,
    pub m_alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda1: Option<f64>,
    pub threshold: Option<f64>,
    /// Smallest f(tau) - lambda1 tau over the tested grid.
    pub min_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub holds: Holds,
    pub witness: Witness,
    /// Hypotheses were probed numerically rather than declared.
    pub probed: bool,
}

impl CriterionVerdict {
    /// `key=value` pairs for the witness, in a fixed order.
    pub fn witness_pairs(&self) -> Vec<(&'static str, String)> {
        let w = &self.witness;
        let mut out = Vec::new();
        if let Some(v) = w.theta {
            out.push(("theta", v.to_string()));
        }
        if let Some((a, b)) = w.t_range {
            out.push(("t_min", a.to_string()));
            out.push(("t_max", b.to_string()));
        }
        if let Some(v) = w.m_alpha {
            out.push(("m_alpha", v.to_string()));
        }
        if let Some(v) = w.kappa {
            out.push(("kappa", v.to_string()));
        }
        if let Some(v) = w.lambda1 {
            out.push(("lambda1", v.to_string()));
        }
        if let Some(v) = w.threshold {
            out.push(("threshold", v.to_string()));
        }
        if let Some(v) = w.min_margin {
            out.push(("min_margin", v.to_string()));
        }
        out
    }
}

/// Geometric grid of `points` values from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        return Err(Error::InvalidArgument(format!(
            "geometric grid needs 0 < lo < hi and >= 2 points, got {lo}, {hi}, {points}"
        )));
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect())
}

/// Default t-grid: 10^2 to 10^10, four points per decade.
pub fn default_t_grid() -> Vec<f64> {
    geometric_grid(1e2, 1e10, 33).expect("static grid")
}

fn resolve_hypotheses(nl: &Nonlinearity) -> Result<(Hypotheses, bool)> {
    match nl.declared_hypotheses() {
        Some(h) => Ok((h, false)),
        None => Ok((check_hypotheses(nl)?, true)),
    }
}

fn require_hypotheses(nl: &Nonlinearity, h: Hypotheses) -> Result<()> {
    if h.all() {
        return Ok(());
    }
    let missing: Vec<String> = h
        .as_array()
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| format!("H{}", i + 1))
        .collect();
    Err(Error::HypothesesUnmet(format!(
        "{nl} does not satisfy {}",
        missing.join(", ")
    )))
}

/// Volume-growth criterion: is there theta in (0, 1) with
/// F(1/t) <= t^(theta/m) for all large t? Power terms use the closed-form
/// equivalence m alpha < 1; everything else goes through the grid search.
pub fn check_thm1(nl: &Nonlinearity, m_degree: f64, t_grid: &[f64]) -> Result<CriterionVerdict> {
    let probed = thm1_preconditions(nl, m_degree, t_grid)?;
    if let NonlinearityKind::Power { alpha } = *nl.kind() {
        let m_alpha = m_degree * alpha;
        let holds = if m_alpha < 1.0 { Holds::Yes } else { Holds::No };
        return Ok(CriterionVerdict {
            criterion: Criterion::Cor1,
            holds,
            witness: Witness {
                theta: (holds == Holds::Yes).then_some(0.5 * (m_alpha + 1.0)),
                m_alpha: Some(m_alpha),
                ..Witness::default()
            },
            probed,
        });
    }
    let mut verdict = check_thm1_grid(nl, m_degree, t_grid)?;
    verdict.probed = probed;
    Ok(verdict)
}

fn thm1_preconditions(nl: &Nonlinearity, m_degree: f64, t_grid: &[f64]) -> Result<bool> {
    if t_grid.len() < 4 || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] > 0.0) {
        return Err(Error::InvalidArgument(
            "t-grid must be increasing, positive and have at least 4 points".into(),
        ));
    }
    let decades = (t_grid[t_grid.len() - 1] / t_grid[0]).log10();
    if decades < 4.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "t-grid spans {decades:.2} decades, need at least 4"
        )));
    }
    if !(m_degree > 0.0 && m_degree.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "growth degree must be positive, got {m_degree}"
        )));
    }
    if nl.f(0.0) != 0.0 {
        return Err(Error::HypothesesUnmet(format!(
            "{nl} has f(0) = {} != 0",
            nl.f(0.0)
        )));
    }
    let (h, probed) = resolve_hypotheses(nl)?;
    require_hypotheses(nl, h)?;
    Ok(probed)
}

/// Grid search for `check_thm1`, without the power-law shortcut.
pub fn check_thm1_grid(
    nl: &Nonlinearity,
    m_degree: f64,
    t_grid: &[f64],
) -> Result<CriterionVerdict> {
    let probed = thm1_preconditions(nl, m_degree, t_grid)?;
    let upper = &t_grid[t_grid.len() / 2..];
    // log F(1/t) at each upper grid point.
    let log_f: Vec<f64> = upper
        .iter()
        .map(|&t| osgood_f(nl, 1.0 / t).map(f64::ln))
        .collect::<Result<_>>()?;
    let thetas: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
    let margin = |theta: f64, i: usize| log_f[i] - theta / m_degree * upper[i].ln();
    let t_range = Some((upper[0], upper[upper.len() - 1]));
    for &theta in &thetas {
        if (0..upper.len()).all(|i| margin(theta, i) <= 0.0) {
            return Ok(CriterionVerdict {
                criterion: Criterion::Thm1,
                holds: Holds::Yes,
                witness: Witness {
                    theta: Some(theta),
                    t_range,
                    ..Witness::default()
                },
                probed,
            });
        }
    }
    // The largest theta is the easiest to satisfy; if even it fails on the
    // top grid points with a growing margin, no theta will.
    let theta = thetas[thetas.len() - 1];
    let n = upper.len();
    let tail: Vec<f64> = (n.saturating_sub(3)..n).map(|i| margin(theta, i)).collect();
    let growing = tail.iter().all(|&v| v > 0.0) && tail.windows(2).all(|w| w[1] > w[0]);
    Ok(CriterionVerdict {
        criterion: Criterion::Thm1,
        holds: if growing {
            Holds::No
        } else {
            Holds::Inconclusive
        },
        witness: Witness {
            t_range,
            ..Witness::default()
        },
        probed,
    })
}

/// Spectral criterion: f(tau) - lambda1 tau > 0 for every tau > kappa,
/// kappa = sum over the interior of mu a phi1.
///
/// Power terms use the closed form kappa > lambda1^(1/alpha); equality is
/// the constant equilibrium and is reported inconclusive.
pub fn check_thm2(
    g: &WeightedGraph,
    dom: &DomainDecomposition,
    eig: &EigenPair,
    nl: &Nonlinearity,
    a: &GraphFunction,
    tau_grid_max: f64,
) -> Result<CriterionVerdict> {
    let (h, probed) = resolve_hypotheses(nl)?;
    require_hypotheses(nl, h)?;
    if a.len() != g.len() {
        return Err(Error::SupportMismatch(
            "initial data length differs from graph".into(),
        ));
    }
    let kappa: f64 = dom
        .interior()
        .iter()
        .map(|&x| g.mu(x) * a.value(x) * eig.phi1.value(x))
        .sum();
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa = {kappa} must be positive"
        )));
    }
    let lambda1 = eig.lambda1;
    if let NonlinearityKind::Power { alpha } = *nl.kind() {
        let threshold = lambda1.powf(1.0 / alpha);
        let holds = if (kappa - threshold).abs() <= 1e-12 * threshold {
            Holds::Inconclusive
        } else if kappa > threshold {
            Holds::Yes
        } else {
            Holds::No
        };
        return Ok(CriterionVerdict {
            criterion: Criterion::Rmk2,
            holds,
            witness: Witness {
                kappa: Some(kappa),
                lambda1: Some(lambda1),
                threshold: Some(threshold),
                ..Witness::default()
            },
            probed,
        });
    }
    let hi = tau_grid_max.min(nl.overflow_threshold());
    if !(hi > kappa) {
        return Err(Error::InvalidArgument(format!(
            "tau grid maximum {tau_grid_max} must exceed kappa = {kappa}"
        )));
    }
    let grid = geometric_grid(kappa * (1.0 + 1e-9), hi, 2000)?;
    let mut min_margin = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    for &tau in &grid {
        let m = nl.f(tau) - lambda1 * tau;
        if !m.is_finite() {
            return Err(Error::Nonlinearity(format!("{nl} is not finite at {tau}")));
        }
        min_margin = min_margin.min(m);
        min_rel = min_rel.min(m / (lambda1 * tau).max(1e-300));
    }
    let holds = if min_rel.abs() <= 1e-12 {
        Holds::Inconclusive
    } else if min_margin > 0.0 {
        Holds::Yes
    } else {
        Holds::No
    };
    Ok(CriterionVerdict {
        criterion: Criterion::Thm2,
        holds,
        witness: Witness {
            kappa: Some(kappa),
            lambda1: Some(lambda1),
            t_range: Some((grid[0], hi)),
            min_margin: Some(min_margin),
            ..Witness::default()
        },
        probed,
    })
}

/// Probes (H1)-(H4) numerically. The results are evidence, not proofs.
pub fn check_hypotheses(nl: &Nonlinearity) -> Result<Hypotheses> {
    let cap = PROBE_MAX.min(nl.overflow_threshold());
    let mut grid = vec![0.0];
    grid.extend(geometric_grid(1e-6, cap, PROBE_POINTS)?);
    let values: Vec<f64> = grid.iter().map(|&u| nl.f(u)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Nonlinearity(format!(
            "{nl} is not finite at {} on the probe grid",
            grid[i]
        )));
    }
    let h1 = true;
    let h2 = values[0] >= 0.0 && values[1..].iter().all(|&v| v > 0.0);
    let mut h3 = true;
    // Consecutive grid points and pairs spread across the grid.
    let n = grid.len();
    let pairs = (0..n - 1).map(|i| (i, i + 1)).chain(
        (0..n)
            .step_by(7)
            .flat_map(|i| (i..n).step_by(53).map(move |j| (i, j))),
    );
    for (i, j) in pairs {
        let (a, b) = (grid[i], grid[j]);
        let avg = 0.5 * (values[i] + values[j]);
        if nl.f(0.5 * (a + b)) > avg + 1e-12 * avg.abs().max(1.0) {
            h3 = false;
            break;
        }
    }
    let h4 = h2 && osgood_f(nl, 1.0)?.is_finite();
    Ok(Hypotheses { h1, h2, h3, h4 })
}
