use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PlanError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The bracket scan for the submarine costate root ran past its limit.
    #[error(
        "no sign change of the bracketing function within {scan_limit} scan steps \
         (beta = {beta:?}, shrink = {shrink}, g(0) = {g0})"
    )]
    BracketNotFound {
        scan_limit: usize,
        beta: [f64; 2],
        shrink: f64,
        g0: f64,
    },

    #[error("solver diverged: non-finite value detected at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error(
        "goal not reachable within horizon {t_hi} (value {value} above tolerance {reach_tol})"
    )]
    NotReachable {
        t_hi: f64,
        value: f64,
        reach_tol: f64,
    },

    #[error("inadmissible control at step {step}: {reason}")]
    InadmissibleControl { step: usize, reason: String },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("scenario error at `{field}`: {message}")]
    Scenario { field: String, message: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("scenario `{id}` failed: {source}")]
    Run {
        id: String,
        #[source]
        source: Box<PlanError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PlanError {
    pub(crate) fn scenario(field: impl Into<String>, message: impl Into<String>) -> Self {
        PlanError::Scenario {
            field: field.into(),
            message: message.into(),
        }
    }
}
