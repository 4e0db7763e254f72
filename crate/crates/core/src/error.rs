use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("design spec has no parameters")]
    Empty,
    #[error("parameter {name}: lower bound {lower} must be finite and below upper bound {upper}")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("integer parameter {0} has non-integer bounds")]
    NonIntegerBounds(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("sample count must be at least 1")]
    EmptyRequest,
    #[error("found only {found} of {wanted} geometry-feasible designs after {rounds} rounds")]
    FeasibilityExhausted {
        wanted: usize,
        found: usize,
        rounds: usize,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum PostprocessError {
    #[error("currents (i_d = {i_d}, i_q = {i_q}) outside the modeled quadrant for I_max = {i_max}")]
    OutOfQuadrant { i_d: f64, i_q: f64, i_max: f64 },
    #[error("voltage limit cannot be met at {omega_m} rad/s")]
    NoFeasiblePoint { omega_m: f64 },
}

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("need at least {needed} training records, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model file shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("model file is not a surrogate model: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("evaluation failed after {} evaluations: {message}", partial.evaluations)]
    EvaluatorFailure {
        message: String,
        partial: Box<crate::optimizer::OptResult>,
    },
}
