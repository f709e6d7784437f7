use thiserror::Error;

/// Errors raised by model construction and the estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition matrix row {row} has no admissible successor")]
    DeadRow { row: usize },

    #[error("transition matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("branches overlap inconsistently on [{lo}, {hi}]")]
    InconsistentOverlap { lo: f64, hi: f64 },

    #[error("non-discrete preimage set: every point of [{lo}, {hi}] (coordinate {coord}) maps to the same image")]
    NonDiscrete { lo: f64, hi: f64, coord: usize },

    #[error("point {point} does not belong to the state space of a {variant} model")]
    PointMismatch {
        point: String,
        variant: &'static str,
    },

    #[error("observable cannot be evaluated on this host: {0}")]
    Observable(String),

    #[error("negative weight {value} at {at}")]
    NegativeWeight { value: f64, at: String },

    #[error("observable depth {required} exceeds the cylinder truncation {limit}")]
    DepthExceeded { required: usize, limit: usize },

    #[error("stationary vector is ambiguous: closed communicating classes {classes:?}")]
    Reducible { classes: Vec<Vec<usize>> },

    #[error("matrix is not stochastic: {0}")]
    NotStochastic(String),

    #[error("the admissibility graph has no cycle, so there is no invariant measure")]
    NoCycle,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("restriction is not forward invariant: {point} escapes")]
    NotForwardInvariant { point: String },

    #[error("operator is not compatible with the subset: {0}")]
    Incompatible(String),

    #[error("hypothesis not certified: {0}")]
    Hypothesis(String),

    #[error("decomposition did not stabilize within depth {depth}")]
    NotStabilized { depth: usize },

    #[error("degenerate schedule: {0}")]
    Schedule(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
