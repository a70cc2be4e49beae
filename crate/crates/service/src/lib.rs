//! HTTP front end for the scorelens engine.

mod config;
mod error;
mod extract;
mod routes;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use config::{ServiceConfig, CONFIG_ENV};
pub use error::{detail_for, status_for, ApiError, ServiceError};
pub use routes::router;
pub use state::{default_models, pair_key, AppState, CachedAttention};

/// A service bound to a socket and running in the background.
pub struct RunningService {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    handle: JoinHandle<std::io::Result<()>>,
    state: Arc<AppState>,
}

impl RunningService {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.handle.await.expect("server task panicked")
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in a background task.
pub async fn spawn(state: Arc<AppState>, addr: SocketAddr) -> Result<RunningService, ServiceError> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(state.clone());
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(RunningService {
        addr,
        shutdown: Some(tx),
        handle,
        state,
    })
}

/// Serves on the configured address until ctrl-c.
pub async fn serve(config: &ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::from_config(config)?);
    let running = spawn(state, config.listen_addr()?).await?;
    tokio::signal::ctrl_c().await?;
    running.stop().await?;
    Ok(())
}
