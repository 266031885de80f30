//! HTTP job service for planning runs.
//!
//! ```text
//! PUT  /network            load a network file, returns a summary
//! GET  /network            nodes, edges and bucket vocabulary
//! POST /jobs               submit a CampaignSpec, returns 202 {"job_id": ..}
//! GET  /jobs/{id}          job record
//! GET  /jobs/{id}/stream   NDJSON: one line per generation, then a terminal line
//! ```
//!
//! Jobs run on blocking threads, at most `max_concurrent_jobs` at a time.
//! Each job captures the network that was active when it was submitted.

mod jobs;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;

pub use jobs::{JobRecord, JobState};
pub use routes::{router, AppState, NetworkSummary};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_concurrent_jobs: usize,
    /// Append-only file of finished jobs, replayed on startup.
    pub journal: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_concurrent_jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            journal: None,
        }
    }
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
