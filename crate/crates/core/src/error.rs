use thiserror::Error;

/// Errors raised by the model, admissibility checks and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state ({u1}, {u2}) lies outside the closed triangle")]
    OutsideSimplex { u1: f64, u2: f64 },

    #[error("state ({u1}, {u2}) is not strictly interior (min component {min} < {margin})")]
    NotInterior {
        u1: f64,
        u2: f64,
        min: f64,
        margin: f64,
    },

    #[error("non-finite coefficient `{0}`")]
    NonFinite(String),

    #[error("negative coefficient `{name}` = {value}")]
    Negative { name: String, value: f64 },

    #[error("competition matrix is singular (det = {0:e})")]
    SingularCompetition(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("singular linear system at row {0}")]
    SingularSystem(usize),

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("time step failed at t = {time} after {halvings} step halvings: {reason}")]
    StepFailure {
        time: f64,
        halvings: usize,
        reason: String,
    },

    #[error("bound violation at t = {time}: cell {cell} left the triangle")]
    BoundViolation { time: f64, cell: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error for key `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
