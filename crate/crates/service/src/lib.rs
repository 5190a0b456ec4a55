//! Multi-tenant filtering service: accounts, per-app term lists, filtering
//! and reports behind a JSON HTTP API backed by SQLite.

pub mod crypto;
pub mod http;
pub mod service;
pub mod store;

use std::sync::Arc;

pub use http::router;
pub use service::{Service, ServiceConfig, ServiceError};

/// Bind `config.bind` and serve until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let bind = config.bind.clone();
    let svc = tokio::task::spawn_blocking(move || Service::open(config))
        .await
        .map_err(std::io::Error::other)?
        .map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(svc)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
