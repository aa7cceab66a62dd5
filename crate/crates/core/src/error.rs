use thiserror::Error;

/// Errors raised by graph construction, solvers and the command-line harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("measure at vertex {vertex} must be positive and finite, got {value}")]
    BadMeasure { vertex: usize, value: f64 },

    #[error("weight on edge ({x}, {y}) must be positive and finite, got {value}")]
    BadWeight { x: usize, y: usize, value: f64 },

    #[error("asymmetric weights on edge ({x}, {y}): {forward} vs {backward}")]
    AsymmetricWeight {
        x: usize,
        y: usize,
        forward: f64,
        backward: f64,
    },

    #[error("duplicate edge ({x}, {y})")]
    DuplicateEdge { x: usize, y: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(
        "truncation too small: ball of radius {radius} around vertex {center} exhausts the graph"
    )]
    TruncationTooSmall { center: usize, radius: usize },

    #[error("volume growth fit needs at least 4 radii, got {0}")]
    TooFewRadii(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("function support mismatch: {0}")]
    SupportMismatch(String),

    #[error("dense solver cap exceeded: {size} > {cap}")]
    SizeOverCap { size: usize, cap: usize },

    #[error("eigen iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("initial data is trivial")]
    TrivialInitialData,

    #[error("nonlinearity: {0}")]
    Nonlinearity(String),

    #[error("hypotheses not satisfied: {0}")]
    HypothesesUnmet(String),

    #[error("mismatched sampling grids: {0}")]
    MismatchedGrids(String),

    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("integration exceeded {0} steps")]
    StepLimit(usize),

    #[error("solver integrity: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// I/O failures map to a distinct process exit code in the CLI.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
