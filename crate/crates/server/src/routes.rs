use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use tensorhpo_api::*;
use tensorhpo_core::benchmarks::{BenchmarkFn, BenchmarkObjective};
use tensorhpo_core::harness::{compare, selftest, ExperimentConfig, Method, SelftestReport, SuiteReport};
use tensorhpo_core::maxvol::{maxvol, RowSelection, ScoreMatrix, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use tensorhpo_core::model::ModelSpec;
use tensorhpo_core::quantum::{self, Jacobians, QuantumLayerSpec};
use tensorhpo_core::{grid_optimize, tt_optimize, Error, GsConfig, SearchSpace};
use uuid::Uuid;

use crate::error::{AppError, AppResult};
use crate::jobs::Job;
use crate::AppState;

/// Largest exhaustive search the synchronous optimize route accepts.
const MAX_SYNC_GRID: u128 = 1 << 22;

pub(crate) fn router() -> Router<AppState> {
    Router::new()
        .route("/health", get(health))
        .route("/v1/experiments", post(submit).get(list))
        .route("/v1/experiments/{id}", get(status).delete(cancel))
        .route("/v1/experiments/{id}/report", get(report))
        .route("/v1/experiments/{id}/csv", get(csv))
        .route("/v1/compare", post(compare_reports))
        .route("/v1/selftest", post(run_selftest))
        .route("/v1/space/discretize", post(discretize))
        .route("/v1/maxvol", post(run_maxvol))
        .route("/v1/benchmarks/evaluate", post(evaluate))
        .route("/v1/optimize", post(optimize))
        .route("/v1/quantum/forward", post(quantum_forward))
        .route("/v1/quantum/gradient", post(quantum_gradient))
        .route("/v1/model/params", post(model_params))
        .fallback(|| async { AppError::not_found("route") })
}

type Body<T> = Result<Json<T>, JsonRejection>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> tensorhpo_core::Result<T> + Send + 'static) -> AppResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError::internal(e.to_string()))?
        .map_err(AppError::from)
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn find(state: &AppState, id: Result<Path<Uuid>, PathRejection>) -> AppResult<std::sync::Arc<Job>> {
    let Path(id) = id.map_err(|r| AppError::new(StatusCode::BAD_REQUEST, "BadRequest", r.body_text()))?;
    state
        .jobs
        .get(id)
        .await
        .ok_or_else(|| AppError::not_found(format!("experiment {id}")))
}

async fn submit(State(state): State<AppState>, body: Body<SubmitExperiment>) -> AppResult<impl IntoResponse> {
    let config = match body?.0 {
        SubmitExperiment::Toml(text) => ExperimentConfig::from_toml(&text)?,
        SubmitExperiment::Config(cfg) => {
            cfg.validate()?;
            *cfg
        }
    };
    let info = state.jobs.submit(config).await?;
    Ok((StatusCode::ACCEPTED, Json(info)))
}

async fn list(State(state): State<AppState>) -> Json<Vec<JobInfo>> {
    Json(state.jobs.list().await)
}

async fn status(State(state): State<AppState>, id: Result<Path<Uuid>, PathRejection>) -> AppResult<Json<JobInfo>> {
    Ok(Json(find(&state, id).await?.info()))
}

async fn cancel(State(state): State<AppState>, id: Result<Path<Uuid>, PathRejection>) -> AppResult<Json<JobInfo>> {
    let job = find(&state, id).await?;
    job.cancel();
    Ok(Json(job.info()))
}

async fn report(State(state): State<AppState>, id: Result<Path<Uuid>, PathRejection>) -> AppResult<Json<SuiteReport>> {
    Ok(Json(find(&state, id).await?.report()))
}

async fn csv(State(state): State<AppState>, id: Result<Path<Uuid>, PathRejection>) -> AppResult<impl IntoResponse> {
    let text = find(&state, id).await?.report().to_csv_string();
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], text))
}

async fn compare_reports(body: Body<CompareRequest>) -> AppResult<Json<CompareResponse>> {
    let req = body?.0;
    let comparison = compare(&req.a, &req.b)?;
    let table = comparison.to_table();
    Ok(Json(CompareResponse { comparison, table }))
}

async fn run_selftest() -> AppResult<Json<SelftestReport>> {
    Ok(Json(blocking(|| Ok(selftest())).await?))
}

async fn discretize(body: Body<DiscretizeRequest>) -> AppResult<Json<DiscretizeResponse>> {
    let space = SearchSpace::new(body?.0.axes)?;
    Ok(Json(DiscretizeResponse {
        grids: (0..space.dim()).map(|a| space.grid(a).to_vec()).collect(),
        size: space.size().to_string(),
    }))
}

async fn run_maxvol(body: Body<MaxvolRequest>) -> AppResult<Json<RowSelection>> {
    let req = body?.0;
    let sel = blocking(move || {
        let m = ScoreMatrix::from_rows(&req.rows)?;
        maxvol(&m, req.tol.unwrap_or(DEFAULT_TOL), req.max_iters.unwrap_or(DEFAULT_MAX_ITERS))
    })
    .await?;
    Ok(Json(sel))
}

async fn evaluate(body: Body<EvaluateRequest>) -> AppResult<Json<EvaluateResponse>> {
    let req = body?.0;
    let f = BenchmarkFn::new(req.kind, req.dim, req.seed)?;
    let values = req.points.iter().map(|x| f.evaluate(x)).collect::<Result<_, _>>()?;
    Ok(Json(EvaluateResponse { values }))
}

async fn optimize(body: Body<OptimizeRequest>) -> AppResult<Json<OptimizeResponse>> {
    let req = body?.0;
    let space = SearchSpace::new(req.axes)?;
    let func = BenchmarkFn::new(req.kind, space.dim(), req.instance_seed)?;
    let objective = BenchmarkObjective::new(func, &space)?;
    if req.method == Method::Gs {
        let budget = req.gs.as_ref().and_then(|g| g.eval_budget).map_or(u128::MAX, |b| b as u128);
        if space.size().min(budget) > MAX_SYNC_GRID {
            return Err(Error::InvalidConfig(format!(
                "grid of {} points exceeds the synchronous limit {MAX_SYNC_GRID}; set gs.eval_budget or submit an experiment",
                space.size()
            ))
            .into());
        }
    }
    let response = blocking(move || {
        let report = match req.method {
            Method::Tt => tt_optimize(&objective, &space, &req.tt.unwrap_or_default())?,
            Method::Gs => grid_optimize(&objective, &space, &req.gs.unwrap_or_else(GsConfig::default))?,
        };
        Ok(OptimizeResponse {
            best_fitness: objective.fitness(&report.best_point),
            report,
        })
    })
    .await?;
    Ok(Json(response))
}

fn layer(req: &QuantumRequest) -> tensorhpo_core::Result<QuantumLayerSpec> {
    let spec = QuantumLayerSpec {
        qubits: req.qubits,
        depth: req.depth,
        schedule: req.schedule.clone(),
    };
    spec.validate()?;
    Ok(spec)
}

async fn quantum_forward(body: Body<QuantumRequest>) -> AppResult<Json<ForwardResponse>> {
    let req = body?.0;
    let expectations = blocking(move || quantum::forward(&layer(&req)?, &req.x, &req.theta)).await?;
    Ok(Json(ForwardResponse { expectations }))
}

async fn quantum_gradient(body: Body<QuantumRequest>) -> AppResult<Json<Jacobians>> {
    let req = body?.0;
    Ok(Json(blocking(move || quantum::gradient(&layer(&req)?, &req.x, &req.theta)).await?))
}

async fn model_params(body: Body<ModelParamsRequest>) -> AppResult<Json<ModelParamsResponse>> {
    let req = body?.0;
    let spec = match req.variant {
        tensorhpo_core::model::Variant::Hybrid => ModelSpec::hybrid(req.n, req.width, req.classes),
        tensorhpo_core::model::Variant::Classical => ModelSpec::classical(req.n, req.width, req.classes),
    };
    spec.validate()?;
    Ok(Json(ModelParamsResponse {
        param_count: spec.param_count(),
        variational_count: spec.variational_count(),
        tensors: spec
            .tensor_shapes()
            .into_iter()
            .map(|(name, shape)| TensorShape {
                name: name.into(),
                shape,
            })
            .collect(),
    }))
}
