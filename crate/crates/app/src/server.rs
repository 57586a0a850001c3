use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use siot_core::graph::RelationKind;

use crate::archive::IndexArchive;
use crate::query::{answer, QueryError, QueryRequest};

pub fn router(archive: Arc<IndexArchive>) -> Router {
    Router::new()
        .route("/discover", post(discover))
        .route("/communities/{relation}", get(communities))
        .route("/healthz", get(healthz))
        .with_state(archive)
}

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

async fn discover(State(archive): State<Arc<IndexArchive>>, body: Bytes) -> Response {
    let request: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                json!({"error": "bad_request", "message": e.to_string()}),
            )
        }
    };
    match answer(&archive, &request) {
        Ok(result) => Json(result).into_response(),
        Err(e) => {
            let status = match e {
                QueryError::BadRequest { .. } => StatusCode::BAD_REQUEST,
                QueryError::UnknownApplication { .. } | QueryError::UnknownRequester { .. } => {
                    StatusCode::UNPROCESSABLE_ENTITY
                }
                QueryError::Internal { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            };
            error(status, serde_json::to_value(&e).expect("error serializes"))
        }
    }
}

async fn communities(State(archive): State<Arc<IndexArchive>>, Path(relation): Path<String>) -> Response {
    let Ok(kind) = relation.parse::<RelationKind>() else {
        return error(
            StatusCode::NOT_FOUND,
            json!({"error": "not_found", "message": format!("unknown relation `{relation}`")}),
        );
    };
    let stats = archive.stats.relation(kind);
    let entries: Vec<_> = stats
        .histogram
        .entries()
        .into_iter()
        .map(|(label, count)| json!({"label": label, "count": count}))
        .collect();
    Json(json!({
        "relation": kind,
        "communities": stats.communities,
        "modularity": stats.modularity,
        "histogram": entries,
    }))
    .into_response()
}

async fn healthz(State(archive): State<Arc<IndexArchive>>) -> Response {
    Json(json!({"status": "ok", "devices": archive.index.devices().len()})).into_response()
}

pub async fn serve(archive: IndexArchive, bind: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(archive)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
