//! HTTP service around the help pipeline: authenticated submission,
//! query history, labeling, class configuration and analytics.

pub mod api;
pub mod auth;
pub mod config;
pub mod error;
pub mod state;

use std::future::Future;

pub use api::router;
pub use auth::{Principal, Role, TokenEntry, TokenFile};
pub use config::{ConfigError, ServerConfig};
pub use error::{ApiError, ErrorBody};
pub use state::{AppState, StartupError};

/// Serve on an already-bound listener until `shutdown` resolves. In-flight
/// requests are allowed to finish.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Startup(#[from] StartupError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Open the data directory, bind the configured address and serve until
/// Ctrl-C.
pub async fn serve(cfg: &ServerConfig) -> Result<(), ServeError> {
    let state = AppState::open(cfg)?;
    let listener = tokio::net::TcpListener::bind(&cfg.listen)
        .await
        .map_err(|source| ServeError::Bind {
            addr: cfg.listen.clone(),
            source,
        })?;
    tracing::info!(addr = %listener.local_addr()?, class = %state.class().class_id, "listening");
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    })
    .await?;
    Ok(())
}
