//! Async client for `tensorhpo-server`.

use std::time::Duration;

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tensorhpo_api::*;
use tensorhpo_core::harness::{ExperimentConfig, SelftestReport, SuiteReport};
use tensorhpo_core::maxvol::RowSelection;
use tensorhpo_core::quantum::Jacobians;
use tensorhpo_core::AxisSpec;
use uuid::Uuid;

pub use tensorhpo_api as api;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    /// The server answered with a structured error.
    #[error("server returned {status}: {body}")]
    Api { status: StatusCode, body: ApiError },
    #[error("server returned {status}: {text}")]
    Unexpected { status: StatusCode, text: String },
}

impl ClientError {
    /// The server-side error kind, when there is one.
    pub fn api(&self) -> Option<&ApiError> {
        match self {
            ClientError::Api { body, .. } => Some(body),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_string(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn send<T: DeserializeOwned>(&self, method: Method, path: &str, body: Option<&impl Serialize>) -> Result<T> {
        let resp = self.request(method, path, body).await?;
        Ok(resp.json().await?)
    }

    async fn request(&self, method: Method, path: &str, body: Option<&impl Serialize>) -> Result<reqwest::Response> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        Err(match serde_json::from_str::<ApiError>(&text) {
            Ok(body) => ClientError::Api { status, body },
            Err(_) => ClientError::Unexpected { status, text },
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.send(Method::GET, path, None::<&()>).await
    }

    async fn post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T> {
        self.send(Method::POST, path, Some(body)).await
    }

    pub async fn health(&self) -> Result<Health> {
        self.get("/health").await
    }

    pub async fn submit_toml(&self, toml: impl Into<String>) -> Result<JobInfo> {
        self.post("/v1/experiments", &SubmitExperiment::Toml(toml.into())).await
    }

    pub async fn submit(&self, config: ExperimentConfig) -> Result<JobInfo> {
        self.post("/v1/experiments", &SubmitExperiment::Config(Box::new(config))).await
    }

    pub async fn experiments(&self) -> Result<Vec<JobInfo>> {
        self.get("/v1/experiments").await
    }

    pub async fn status(&self, id: Uuid) -> Result<JobInfo> {
        self.get(&format!("/v1/experiments/{id}")).await
    }

    pub async fn cancel(&self, id: Uuid) -> Result<JobInfo> {
        self.send(Method::DELETE, &format!("/v1/experiments/{id}"), None::<&()>).await
    }

    pub async fn report(&self, id: Uuid) -> Result<SuiteReport> {
        self.get(&format!("/v1/experiments/{id}/report")).await
    }

    pub async fn csv(&self, id: Uuid) -> Result<String> {
        let resp = self
            .request(Method::GET, &format!("/v1/experiments/{id}/csv"), None::<&()>)
            .await?;
        Ok(resp.text().await?)
    }

    /// Polls until the job is completed, failed or cancelled, calling
    /// `on_update` with every status seen.
    pub async fn wait(&self, id: Uuid, every: Duration, mut on_update: impl FnMut(&JobInfo)) -> Result<JobInfo> {
        loop {
            let info = self.status(id).await?;
            on_update(&info);
            if info.state.is_terminal() {
                return Ok(info);
            }
            tokio::time::sleep(every).await;
        }
    }

    pub async fn compare(&self, a: SuiteReport, b: SuiteReport) -> Result<CompareResponse> {
        self.post("/v1/compare", &CompareRequest { a, b }).await
    }

    pub async fn selftest(&self) -> Result<SelftestReport> {
        self.post("/v1/selftest", &()).await
    }

    pub async fn discretize(&self, axes: Vec<AxisSpec>) -> Result<DiscretizeResponse> {
        self.post("/v1/space/discretize", &DiscretizeRequest { axes }).await
    }

    pub async fn maxvol(&self, req: &MaxvolRequest) -> Result<RowSelection> {
        self.post("/v1/maxvol", req).await
    }

    pub async fn evaluate(&self, req: &EvaluateRequest) -> Result<EvaluateResponse> {
        self.post("/v1/benchmarks/evaluate", req).await
    }

    pub async fn optimize(&self, req: &OptimizeRequest) -> Result<OptimizeResponse> {
        self.post("/v1/optimize", req).await
    }

    pub async fn quantum_forward(&self, req: &QuantumRequest) -> Result<ForwardResponse> {
        self.post("/v1/quantum/forward", req).await
    }

    pub async fn quantum_gradient(&self, req: &QuantumRequest) -> Result<Jacobians> {
        self.post("/v1/quantum/gradient", req).await
    }

    pub async fn model_params(&self, req: &ModelParamsRequest) -> Result<ModelParamsResponse> {
        self.post("/v1/model/params", req).await
    }
}
