use std::fmt;

use crate::params::ShapeReport;

/// A single violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    NonPositiveParameter {
        name: &'static str,
        value: f64,
    },
    /// `mu = 0` is a legitimate equation but every closed form here divides by it.
    ZeroDecayRate,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::NonPositiveParameter { name, value } => {
                write!(f, "{name} must be > 0 (got {value})")
            }
            ParamViolation::ZeroDecayRate => {
                write!(f, "mu must be > 0 (mu = 0 has no closed-form return map)")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config parse error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("identically zero segment starting at t = {t}")]
    DegenerateSegment { t: f64 },

    #[error("time {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("iterate {index} left the single-period regime (h = {h}): {failed}")]
    ShapeViolated {
        index: usize,
        h: f64,
        failed: String,
    },

    #[error("hypothesis failed: {}", .0.join(", "))]
    HypothesisFailed(Vec<String>),

    #[error("shape conditions fail at the fixed point: {}", .0.failed_names().join(", "))]
    ShapeFailed(Box<ShapeReport>),

    #[error("delta = {delta} too large (limit {limit})")]
    DeltaTooLarge { delta: f64, limit: f64 },

    #[error("no admissible mixing constant: {0}")]
    NoAdmissibleMixing(String),

    #[error("rho = {rho} too wide (max admissible {limit})")]
    WindowTooWide { rho: f64, limit: f64 },

    #[error("cannot align breakpoints on a grid with N <= {max_n}: {detail}")]
    GridMisaligned { max_n: usize, detail: String },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("fixed-point search did not converge after {} iterations", .trace.len())]
    NoConvergence { trace: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[ParamViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
