use thiserror::Error;

/// Broad failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Nonconvergence,
    Truncation,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("process must have at least one type")]
    EmptySpec,
    #[error("expected {expected} type laws, found {found}")]
    LawCount { expected: usize, found: usize },
    #[error("type {ty}: offspring vector {j} has length {found}, expected {expected}")]
    DimensionMismatch {
        ty: usize,
        j: String,
        found: usize,
        expected: usize,
    },
    #[error("type {ty}: split rate must be positive and finite, got {theta}")]
    InvalidRate { ty: usize, theta: f64 },
    #[error("type {ty}: probability of {j} must lie in [0, 1], got {p}")]
    InvalidProbability { ty: usize, j: String, p: f64 },
    #[error("type {ty}: offspring probabilities sum to {sum}, expected 1")]
    ProbabilitySum { ty: usize, sum: f64 },
    #[error("type {ty}: offspring vector {j} listed more than once")]
    DuplicateOffspring { ty: usize, j: String },
    #[error("type {ty}: the no-change split {j} must have probability zero")]
    NoChangeSplit { ty: usize, j: String },
    #[error("type index {ty} out of range for dimension {d}")]
    TypeOutOfRange { ty: usize, d: usize },
    #[error("point has {found} coordinates, expected {expected}")]
    PointDimension { found: usize, expected: usize },
    #[error("point coordinate {index} = {value} lies outside [0, 1]")]
    PointOutOfBox { index: usize, value: f64 },
    #[error("expected {expected} marked sets, found {found}")]
    MarkSetCount { expected: usize, found: usize },
    #[error("type {ty}: marked vector {j} is not in the offspring support")]
    MarkNotInSupport { ty: usize, j: String },
    #[error("type {ty}: marked vector {j} listed more than once")]
    DuplicateMark { ty: usize, j: String },
    #[error("type {ty}: no value assigned to marked vector {j}")]
    MissingMarkValue { ty: usize, j: String },
    #[error("type {ty}: {j} is not a marked vector")]
    UnknownMark { ty: usize, j: String },
    #[error("type {ty}: mark value for {j} must lie in {range}, got {value}")]
    MarkValueOutOfRange {
        ty: usize,
        j: String,
        value: f64,
        range: &'static str,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("fixed-point iteration did not converge in {iterations} iterations (last step {last_step:e})")]
    NotConverged { iterations: u64, last_step: f64 },
    #[error("integrator left the unit box by {excursion:e}; retry with a smaller step")]
    ClampExceeded { excursion: f64 },
    #[error("flow did not settle before horizon {horizon}: flow {flow:?}, root {root:?}")]
    HorizonCap {
        horizon: f64,
        flow: Vec<f64>,
        root: Vec<f64>,
    },
    #[error("flow limit {flow:?} disagrees with marked root {root:?}")]
    LimitMismatch { flow: Vec<f64>, root: Vec<f64> },
    #[error("negative discriminant {0} in closed-form root")]
    NegativeDiscriminant(f64),
    #[error("cannot step from the absorbed state")]
    Absorbed,
    #[error("{truncated} of {replicas} replicas hit the population cap")]
    Truncated { truncated: u64, replicas: u64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotConverged { .. }
            | Error::ClampExceeded { .. }
            | Error::HorizonCap { .. }
            | Error::LimitMismatch { .. } => ErrorKind::Nonconvergence,
            Error::Truncated { .. } => ErrorKind::Truncation,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
