//! HTTP/JSON service for the sonification study.
//!
//! Routes:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | create a session from a study config |
//! | GET | `/sessions/{id}/next` | issue the next trial |
//! | POST | `/sessions/{id}/trials/{tid}/feedback` | answer a trial |
//! | GET | `/sessions/{id}/status` | phase, progress, outstanding trial |
//! | GET | `/sessions/{id}/report` | debrief once the session is done |
//! | GET | `/libraries/{lib}/manifest` | library manifest |
//! | GET | `/libraries/{lib}/audio/{key}.wav` | WAV by content hash or file name |
//!
//! Errors are `{"code": ..., "message": ...}` with a 4xx/5xx status.

pub mod audit;
pub mod config;
pub mod error;
pub mod routes;
pub mod store;

use std::sync::Arc;

pub use config::ServiceConfig;
pub use error::{ApiError, ConfigError, ErrorBody};
pub use routes::router;
pub use store::AppState;

/// Binds and serves until ctrl-c. Every acknowledged response is already
/// synced to its log, so shutdown has nothing left to flush.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = format!("{}:{}", config.bind, config.port);
    let state = AppState::open(config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await
}
