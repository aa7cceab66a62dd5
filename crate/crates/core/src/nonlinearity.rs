//! Reaction terms f(u) and their declared hypotheses.
//!
//! `Power(alpha)` is f(u) = u^{1+alpha}; its Osgood integral
//! F(r) = int_r^inf dtau / f(tau) is r^{-alpha} / alpha.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    Power { alpha: f64 },
    Expm1,
    Exp,
    Linear,
    Custom { name: String },
}

/// Flags for (H1) continuity, (H2) f(0) >= 0 and f > 0 on (0, inf),
/// (H3) convexity, (H4) finite Osgood integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypotheses {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    pub h4: bool,
}

impl Hypotheses {
    pub fn all(&self) -> bool {
        self.h1 && self.h2 && self.h3 && self.h4
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.h1, self.h2, self.h3, self.h4]
    }
}

#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    custom: Option<(ScalarFn, Option<ScalarFn>)>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .finish()
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NonlinearityKind::Power { alpha } => write!(f, "power(alpha={alpha})"),
            NonlinearityKind::Expm1 => write!(f, "expm1"),
            NonlinearityKind::Exp => write!(f, "exp"),
            NonlinearityKind::Linear => write!(f, "linear"),
            NonlinearityKind::Custom { name } => write!(f, "custom({name})"),
        }
    }
}

impl Nonlinearity {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Nonlinearity(format!(
                "power nonlinearity needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Self::of_kind(NonlinearityKind::Power { alpha }))
    }

    pub fn expm1() -> Self {
        Self::of_kind(NonlinearityKind::Expm1)
    }

    pub fn exp() -> Self {
        Self::of_kind(NonlinearityKind::Exp)
    }

    pub fn linear() -> Self {
        Self::of_kind(NonlinearityKind::Linear)
    }

    /// A user-supplied reaction term. Its hypotheses are only ever probed.
    pub fn custom(name: &str, f: ScalarFn, f_prime: Option<ScalarFn>) -> Self {
        Nonlinearity {
            kind: NonlinearityKind::Custom {
                name: name.to_string(),
            },
            custom: Some((f, f_prime)),
        }
    }

    fn of_kind(kind: NonlinearityKind) -> Self {
        Nonlinearity { kind, custom: None }
    }

    /// Parses a CLI kind name; `alpha` is required for `power`.
    pub fn from_name(kind: &str, alpha: Option<f64>) -> Result<Self> {
        match kind {
            "power" => {
                Self::power(alpha.ok_or_else(|| {
                    Error::Nonlinearity("power nonlinearity needs --alpha".into())
                })?)
            }
            "expm1" => Ok(Self::expm1()),
            "exp" => Ok(Self::exp()),
            "linear" => Ok(Self::linear()),
            other => Err(Error::Nonlinearity(format!(
                "unknown nonlinearity `{other}` (expected power, expm1, exp or linear)"
            ))),
        }
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn is_custom(&self) -> bool {
        self.custom.is_some()
    }

    /// f(u). Power terms are extended by zero for negative arguments so that
    /// round-off below zero stays finite.
    pub fn f(&self, u: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { alpha } => {
                let p = 1.0 + alpha;
                let v = u.max(0.0);
                if p == 2.0 {
                    v * v
                } else {
                    v.powf(p)
                }
            }
            NonlinearityKind::Expm1 => u.exp_m1(),
            NonlinearityKind::Exp => u.exp(),
            NonlinearityKind::Linear => u,
            NonlinearityKind::Custom { .. } => (self.custom.as_ref().unwrap().0)(u),
        }
    }

    pub fn f_prime(&self, u: f64) -> Option<f64> {
        match &self.kind {
            NonlinearityKind::Power { alpha } => Some((1.0 + alpha) * u.max(0.0).powf(*alpha)),
            NonlinearityKind::Expm1 | NonlinearityKind::Exp => Some(u.exp()),
            NonlinearityKind::Linear => Some(1.0),
            NonlinearityKind::Custom { .. } => {
                self.custom.as_ref().unwrap().1.as_ref().map(|fp| fp(u))
            }
        }
    }

    /// Declared (H1)-(H4) for built-in kinds; `None` for custom terms, which
    /// must be probed.
    pub fn declared_hypotheses(&self) -> Option<Hypotheses> {
        let all = Hypotheses {
            h1: true,
            h2: true,
            h3: true,
            h4: true,
        };
        match self.kind {
            NonlinearityKind::Power { .. } | NonlinearityKind::Expm1 | NonlinearityKind::Exp => {
                Some(all)
            }
            NonlinearityKind::Linear => Some(Hypotheses { h4: false, ..all }),
            NonlinearityKind::Custom { .. } => None,
        }
    }

    /// Closed-form F(r) = int_r^inf dtau / f(tau), when known. May be +inf.
    pub fn osgood_closed_form(&self, r: f64) -> Option<f64> {
        match self.kind {
            NonlinearityKind::Power { alpha } => Some(r.powf(-alpha) / alpha),
            NonlinearityKind::Expm1 => Some(-(-(-r).exp()).ln_1p()),
            NonlinearityKind::Exp => Some((-r).exp()),
            NonlinearityKind::Linear => Some(f64::INFINITY),
            NonlinearityKind::Custom { .. } => None,
        }
    }

    /// Largest argument at which f is finite in double precision.
    pub fn overflow_threshold(&self) -> f64 {
        match self.kind {
            NonlinearityKind::Power { alpha } => f64::MAX.powf(1.0 / (1.0 + alpha)),
            NonlinearityKind::Expm1 | NonlinearityKind::Exp => f64::MAX.ln(),
            NonlinearityKind::Linear | NonlinearityKind::Custom { .. } => f64::MAX,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            NonlinearityKind::Power { alpha } => Some(alpha),
            _ => None,
        }
    }
}
