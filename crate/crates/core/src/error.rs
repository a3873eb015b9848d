use std::path::PathBuf;

use crate::curve::PolygonalCurve;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate mesh: segment {index} has length {length:e}")]
    DegenerateSegment { index: usize, length: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("contact points crossed: left x = {left}, right x = {right}")]
    ContactOrder { left: f64, right: f64 },

    #[error("reference curve violates the well-posedness conditions (end normals {first_nx:e}, {last_nx:e}; min segment {min_length:e})")]
    IllPosed {
        first_nx: f64,
        last_nx: f64,
        min_length: f64,
    },

    #[error("singular step system: pivot {pivot:e} at row {row} (min/max pivot ratio {ratio:e})")]
    SingularSystem { row: usize, pivot: f64, ratio: f64 },

    #[error("step system solved with residual {residual:e} above tolerance {tolerance:e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("rank-deficient least-squares system at node {node}")]
    RankDeficient { node: usize },

    #[error("history holds {have} curves, order {need} requires {need}")]
    InsufficientHistory { have: usize, need: usize },

    #[error("{phase} failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        phase: Phase,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory aborted after {completed} steps: {source}")]
    TrajectoryFailed {
        completed: usize,
        last_good: Box<PolygonalCurve>,
        #[source]
        source: Box<Error>,
    },

    #[error("no equilibrium within {max_steps} steps")]
    NoEquilibrium { max_steps: usize },

    #[error("region boundary is not simple: edges {first} and {second} intersect")]
    NonSimpleRegion { first: usize, second: usize },

    #[error("region has non-positive area {0:e}")]
    EmptyRegion(f64),

    #[error("{0}")]
    Order(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which solve of a multi-stage step failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Step,
    Predictor,
    Corrector,
    Bootstrap,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Step => "step",
            Phase::Predictor => "predictor",
            Phase::Corrector => "corrector",
            Phase::Bootstrap => "bootstrap",
        })
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_phase(self, step: usize, phase: Phase) -> Self {
        Error::StepFailed {
            step,
            phase,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
