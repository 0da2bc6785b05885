//! HTTP service and command-line shell around the dubbing pipeline.
//!
//! Stages run on blocking worker threads; progress fans out to server-sent
//! event subscribers. Project state persists as JSON next to the artifact
//! store, so a restarted service picks up where it left off.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod state;

use std::future::Future;
use std::sync::Arc;

pub use config::ServiceConfig;
pub use state::AppState;

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, api::router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
