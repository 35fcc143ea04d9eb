use thiserror::Error;

/// Errors surfaced by learners, reductions and benchmarks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("action space needs at least one arm")]
    EmptyActionSpace,

    #[error("range of arm {arm} must be positive, got {value}")]
    NonPositiveRange { arm: usize, value: f64 },

    #[error("prior is not a probability vector: {reason}")]
    InvalidPrior { reason: String },

    #[error("probability vector invalid: {reason}")]
    InvalidSimplexPoint { reason: String },

    #[error("weight for arm {arm} is not finite or not positive")]
    NonFiniteWeight { arm: usize },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("learning rate eta={eta} outside required interval {bound}")]
    InvalidEta { eta: f64, bound: &'static str },

    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("reward {value} for arm {arm} outside [{lo}, {hi}]")]
    RewardOutOfRange {
        arm: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("arm index {arm} out of bounds for {k} arms")]
    InvalidArm { arm: usize, k: usize },

    #[error("value {value} at round {round} outside [{lo}, {hi}]")]
    ValueOutOfRange { round: usize, value: f64, lo: f64, hi: f64 },

    #[error("solver did not converge: {0}")]
    SolverFailure(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("mechanism ordering invalid: {0}")]
    MalformedOrdering(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
