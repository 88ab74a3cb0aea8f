//! HTTP/JSON front end for `tensorhpo-core`.
//!
//! Experiments run as background jobs: submit a config, poll its status,
//! fetch the (possibly partial) report, or cancel it. The smaller operations
//! (discretization, MaxVol, benchmark evaluation, single optimizer runs, the
//! quantum layer and parameter accounting) answer synchronously.
//!
//! ```no_run
//! # async fn run() -> std::io::Result<()> {
//! let listener = tokio::net::TcpListener::bind("127.0.0.1:8080").await?;
//! tensorhpo_server::serve(listener, tensorhpo_server::AppState::default(), std::future::pending()).await
//! # }
//! ```

mod error;
mod jobs;
mod routes;

use std::future::Future;
use std::sync::Arc;

use axum::Router;
use tokio::net::TcpListener;

pub use error::{AppError, AppResult};
pub use jobs::{Job, Jobs};

/// Shared state behind every handler.
#[derive(Clone)]
pub struct AppState {
    pub jobs: Arc<Jobs>,
}

impl AppState {
    pub fn new(max_running: usize) -> Self {
        Self {
            jobs: Arc::new(Jobs::new(max_running)),
        }
    }
}

impl Default for AppState {
    /// One running experiment per available core.
    fn default() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, usize::from))
    }
}

pub fn router(state: AppState) -> Router {
    routes::router().with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
