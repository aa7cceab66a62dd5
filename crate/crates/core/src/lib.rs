//! Semilinear heat flow `u_t = Delta u + f(u)` on weighted graphs.
//!
//! * [`graph`]: weighted graphs, hop distances, balls, volume growth.
//! * [`laplacian`]: the mu-Laplacian and the Dirichlet Laplacian.
//! * [`spectral`]: first Dirichlet eigenpair.
//! * [`heat_kernel`]: heat semigroup and kernel, series and dense routes.
//! * [`nonlinearity`], [`dynamics`]: reaction terms, adaptive integration,
//!   blow-up detection and the monitored functionals.
//! * [`criteria`]: Osgood integral and sufficient blow-up conditions.
//! * [`harness`]: command line, sweeps and file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod harness;
pub mod heat_kernel;
pub mod laplacian;
pub mod nonlinearity;
pub mod spectral;

pub use error::{Error, Result};
