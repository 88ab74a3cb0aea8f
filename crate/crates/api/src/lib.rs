//! JSON bodies exchanged between `tensorhpo-server` and its clients.
//!
//! Every route lives under [`PREFIX`]. Errors always come back as
//! [`ApiError`] with a non-2xx status.

use serde::{Deserialize, Serialize};
use tensorhpo_core::benchmarks::BenchmarkKind;
use tensorhpo_core::error::FieldError;
use tensorhpo_core::harness::{ExperimentConfig, Method, ObjectiveKind, SuiteReport};
use tensorhpo_core::model::Variant;
use tensorhpo_core::quantum::AxisSchedule;
use tensorhpo_core::{AxisSpec, GsConfig, TtConfig};
use uuid::Uuid;

pub const PREFIX: &str = "/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

/// Uniform error body. `kind` is a stable variant name such as
/// `ConfigInvalid` or `NotFound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<ApiFieldError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiFieldError {
    pub field: String,
    pub message: String,
}

impl From<&FieldError> for ApiFieldError {
    fn from(f: &FieldError) -> Self {
        Self {
            field: f.field.clone(),
            message: f.message.clone(),
        }
    }
}

impl From<&tensorhpo_core::Error> for ApiError {
    fn from(e: &tensorhpo_core::Error) -> Self {
        let fields = match e {
            tensorhpo_core::Error::ConfigInvalid(f) => f.iter().map(Into::into).collect(),
            _ => Vec::new(),
        };
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
            fields,
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

/// Either a TOML document or an already structured config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitExperiment {
    Toml(String),
    Config(Box<ExperimentConfig>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Completed,
    Failed,
    Cancelled,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Completed | JobState::Failed | JobState::Cancelled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobInfo {
    pub id: Uuid,
    pub state: JobState,
    pub method: Method,
    pub objective: ObjectiveKind,
    pub trials_done: usize,
    pub trials_total: usize,
    /// File name the report is meant to be written under.
    pub output_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRequest {
    pub a: SuiteReport,
    pub b: SuiteReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub comparison: tensorhpo_core::harness::Comparison,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeRequest {
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeResponse {
    pub grids: Vec<Vec<f64>>,
    /// Grid size as a decimal string; it can exceed `u64`.
    pub size: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxvolRequest {
    pub rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub kind: BenchmarkKind,
    pub dim: usize,
    /// Instance seed; only Fletcher-Powell uses it.
    #[serde(default)]
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub values: Vec<f64>,
}

/// One TT or GS run on a benchmark over an explicit space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    pub method: Method,
    pub kind: BenchmarkKind,
    #[serde(default)]
    pub instance_seed: u64,
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub tt: Option<TtConfig>,
    #[serde(default)]
    pub gs: Option<GsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResponse {
    /// In the benchmark's own (minimized) sign.
    pub best_fitness: f64,
    pub report: tensorhpo_core::TrialReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumRequest {
    pub qubits: usize,
    pub depth: usize,
    #[serde(default)]
    pub schedule: AxisSchedule,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardResponse {
    pub expectations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParamsRequest {
    pub variant: Variant,
    pub n: usize,
    /// Circuit depth for the hybrid, hidden width for the classical model.
    pub width: usize,
    #[serde(default = "two")]
    pub classes: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorShape {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParamsResponse {
    pub param_count: usize,
    pub variational_count: usize,
    pub tensors: Vec<TensorShape>,
}
