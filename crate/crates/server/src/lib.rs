//! HTTP JSON API over catalog search and per-user topic timelines.
//!
//! Every mutating endpoint appends one event to the user's log, fsyncs it,
//! and only then applies it and answers. Responses are built from the state
//! after the write, so a following GET always sees it.

mod clock;
mod error;
mod routes;
mod state;

use std::future::Future;
use std::io;

use axum::routing::{get, patch, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

pub use clock::{CLIENT_TIME_HEADER, CLOCK_SKEW};
pub use error::{ApiError, ErrorCode};
pub use routes::{
    NewUser, OngoingRequest, Paging, QueryRequest, RemoveRequest, RenameRequest, ResultCard, SaveRequest, SerpResponse,
};
pub use state::{AppState, UserSlot};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/users", post(routes::create_user))
        .route("/api/users/{user_id}/queries", post(routes::issue_query))
        .route("/api/users/{user_id}/topics", get(routes::list_topics))
        .route("/api/users/{user_id}/ongoing", post(routes::set_ongoing))
        .route("/api/topics/{topic_id}", patch(routes::rename_topic))
        .route("/api/topics/{topic_id}/queries/{query_event_id}/reissue", post(routes::reissue_query))
        .route("/api/topics/{topic_id}/saves", post(routes::save_result))
        .route("/api/topics/{topic_id}/removals", post(routes::remove_result))
        .route("/api/topics/{topic_id}/timeline", get(routes::timeline))
        .route("/api/resources/{resource_id}", get(routes::get_resource))
        .route("/api/export/events", get(routes::export_events))
        .fallback(routes::not_found)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serve until `shutdown` resolves, then snapshot every user.
pub async fn serve<F>(listener: TcpListener, state: AppState, shutdown: F) -> io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state.clone())).with_graceful_shutdown(shutdown).await?;
    match state.write_snapshots() {
        Ok(n) => tracing::info!(users = n, "snapshots written"),
        // Snapshots are an optimisation; the log alone is authoritative.
        Err(e) => tracing::warn!(error = %e, "could not write snapshots"),
    }
    Ok(())
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {}
        () = term => {}
    }
    tracing::info!("shutdown requested");
}
