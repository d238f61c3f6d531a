//! Annotation backend: serves units, accepts annotations, previews scores,
//! tracks progress and exports annotated documents.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use log::info;
use mqm_core::corpus::DatasetRecord;

pub use api::router;
pub use store::{AnnotationTask, LogEntry, Store, StoreConfig, StoreError, TaskStatus};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub state_dir: PathBuf,
    pub snapshot_every: u64,
    pub cors_origin: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server: {0}")]
    Server(std::io::Error),
    #[error("{0}")]
    Config(String),
}

/// Opens the store and serves until ctrl-c.
pub async fn serve(records: Vec<DatasetRecord>, cfg: ServiceConfig) -> Result<(), ServeError> {
    let store_cfg = StoreConfig { state_dir: cfg.state_dir.clone(), snapshot_every: cfg.snapshot_every };
    let store =
        tokio::task::spawn_blocking(move || Store::open(records, store_cfg)).await.map_err(|e| ServeError::Config(e.to_string()))??;
    let app = router(Arc::new(store), cfg.cors_origin.as_deref()).map_err(ServeError::Config)?;
    let listener = tokio::net::TcpListener::bind(cfg.bind).await.map_err(|source| ServeError::Bind { addr: cfg.bind, source })?;
    let local = listener.local_addr().map_err(ServeError::Server)?;
    info!("listening on http://{local}");
    // announced on stdout so wrappers can discover an ephemeral port
    println!("listening on http://{local}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServeError::Server)
}
