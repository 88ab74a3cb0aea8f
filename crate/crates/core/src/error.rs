use serde::Serialize;
use thiserror::Error;

use crate::search_space::GridPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single offending field in an experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid axis `{axis}`: {reason}")]
    InvalidAxis { axis: String, reason: String },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("axis `{axis}`: integer rounding produced repeated grid value {value}")]
    DuplicateGridValue { axis: String, value: f64 },
    #[error("index {index} out of range for axis with {points} points")]
    IndexOutOfRange { index: usize, points: usize },
    #[error("malformed score matrix: {0}")]
    InvalidMatrix(String),
    #[error("score matrix is rank deficient even after ridge regularization")]
    RankDeficient,
    #[error("rank {rank} exceeds the smallest axis size {points}")]
    RankExceedsAxis { rank: usize, points: usize },
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned non-finite value {value} at indices {:?}", point.indices)]
    ObjectiveFailure { point: GridPoint, value: f64 },
    #[error("objective failed at indices {:?}: {message}", point.indices)]
    ObjectiveError { point: GridPoint, message: String },
    #[error("coordinate {index} = {value} outside domain [{lower}, {upper}]")]
    DomainViolation {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("wire {wire} out of range for {qubits} qubits")]
    WireOutOfRange { wire: usize, qubits: usize },
    #[error("shape mismatch: expected {expected}, got {actual} ({what})")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid model specification: {0}")]
    SpecInvalid(String),
    #[error("probability {0} is not a valid distribution entry")]
    InvalidProbability(f64),
    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid configuration: {}", join_fields(.0))]
    ConfigInvalid(Vec<FieldError>),
    #[error("experiments cannot be compared: {0}")]
    MismatchedExperiments(String),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error("run cancelled")]
    Cancelled,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidAxis { .. } => "InvalidAxis",
            Error::InvalidSpace(_) => "InvalidSpace",
            Error::DuplicateGridValue { .. } => "DuplicateGridValue",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InvalidMatrix(_) => "InvalidMatrix",
            Error::RankDeficient => "RankDeficient",
            Error::RankExceedsAxis { .. } => "RankExceedsAxis",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ObjectiveFailure { .. } => "ObjectiveFailure",
            Error::ObjectiveError { .. } => "ObjectiveFailure",
            Error::DomainViolation { .. } => "DomainViolation",
            Error::WireOutOfRange { .. } => "WireOutOfRange",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::InvalidProbability(_) => "InvalidProbability",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::MismatchedExperiments(_) => "MismatchedExperiments",
            Error::MalformedReport(_) => "MalformedReport",
            Error::Cancelled => "Cancelled",
            Error::Io(_) => "Io",
        }
    }
}

fn join_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
