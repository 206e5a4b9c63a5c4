//! JSON API for interactive labeling sessions.
//!
//! | Method | Path            | Body / result                                   |
//! |--------|-----------------|-------------------------------------------------|
//! | GET    | `/api/session`  | session descriptor                              |
//! | GET    | `/api/batch`    | pending samples; trains the next round lazily   |
//! | POST   | `/api/labels`   | `{ "<id>": [0, 1, ...], ... }`                  |
//! | GET    | `/api/progress` | per-round test metrics                          |
//!
//! Every response body is a JSON object with a `status` field: `ok`,
//! `busy`, `complete` or `error`.

mod engine;
pub mod thumbnail;

use std::collections::BTreeMap;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

pub use engine::{
    BatchItem, Engine, EngineClosed, PendingView, ProgressRow, SessionInfo, Snapshot,
};
use mlal_core::{Error, LabelVector, SampleId};

type Reply = (StatusCode, Json<Value>);

fn error(code: StatusCode, message: impl Into<String>) -> Reply {
    (
        code,
        Json(json!({ "status": "error", "message": message.into() })),
    )
}

fn no_session() -> Reply {
    error(StatusCode::NOT_FOUND, "no active experiment")
}

fn closed() -> Reply {
    error(StatusCode::INTERNAL_SERVER_ERROR, "engine stopped")
}

pub fn router(engine: Option<Engine>) -> Router {
    Router::new()
        .route("/api/session", get(session))
        .route("/api/batch", get(batch))
        .route("/api/labels", post(labels))
        .route("/api/progress", get(progress))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "unknown endpoint") })
        .with_state(engine)
}

pub async fn serve(addr: SocketAddr, engine: Option<Engine>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(engine)).await
}

async fn session(State(engine): State<Option<Engine>>) -> Reply {
    let Some(engine) = engine else {
        return no_session();
    };
    let snap = engine.snapshot();
    let mut body = serde_json::to_value(&snap.session).unwrap_or_default();
    body["status"] = json!("ok");
    body["busy"] = json!(snap.busy);
    body["finished"] = json!(snap.finished);
    (StatusCode::OK, Json(body))
}

fn batch_body(snap: &Snapshot) -> Option<Value> {
    let pending = snap.pending.as_ref()?;
    let items: Vec<Value> = pending
        .items
        .iter()
        .map(|item| {
            let mut v = json!({
                "id": item.id,
                "features": item.features,
                "already_received": pending.received.contains(&item.id),
            });
            if let Some(t) = &item.thumbnail {
                v["thumbnail"] = json!(t);
            }
            v
        })
        .collect();
    Some(json!({
        "status": "ok",
        "iteration": pending.iteration,
        "remaining": pending.items.len() - pending.received.len(),
        "items": items,
    }))
}

async fn batch(State(engine): State<Option<Engine>>) -> Reply {
    let Some(engine) = engine else {
        return no_session();
    };
    let snap = engine.snapshot();
    if let Some(body) = batch_body(&snap) {
        return (StatusCode::OK, Json(body));
    }
    if snap.finished {
        return (
            StatusCode::OK,
            Json(json!({ "status": "complete", "iteration": snap.session.iteration })),
        );
    }
    if snap.busy {
        return (StatusCode::OK, Json(json!({ "status": "busy" })));
    }
    match engine.advance().await {
        Err(EngineClosed) => return closed(),
        Ok(Err(message)) => return error(StatusCode::INTERNAL_SERVER_ERROR, message),
        Ok(Ok(())) => {}
    }
    let snap = engine.snapshot();
    match batch_body(&snap) {
        Some(body) => (StatusCode::OK, Json(body)),
        None if snap.finished => (
            StatusCode::OK,
            Json(json!({ "status": "complete", "iteration": snap.session.iteration })),
        ),
        None => (StatusCode::OK, Json(json!({ "status": "busy" }))),
    }
}

async fn labels(State(engine): State<Option<Engine>>, body: Bytes) -> Reply {
    let Some(engine) = engine else {
        return no_session();
    };
    let labels: BTreeMap<SampleId, LabelVector> = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                format!("expected an object mapping ids to 0/1 arrays: {e}"),
            )
        }
    };
    match engine.submit(labels).await {
        Err(EngineClosed) => closed(),
        Ok(Ok(outcome)) => {
            let snap = engine.snapshot();
            (
                StatusCode::OK,
                Json(json!({
                    "status": "ok",
                    "accepted": outcome.accepted,
                    "remaining": outcome.remaining,
                    "resolved": outcome.resolved,
                    "iteration": snap.session.iteration,
                })),
            )
        }
        Ok(Err(Error::Rejected(reasons))) => {
            let remaining = engine
                .snapshot()
                .pending
                .map_or(0, |p| p.items.len() - p.received.len());
            (
                StatusCode::UNPROCESSABLE_ENTITY,
                Json(json!({
                    "status": "error",
                    "message": "submission rejected",
                    "errors": reasons,
                    "remaining": remaining,
                })),
            )
        }
        Ok(Err(Error::NoPendingBatch)) => {
            error(StatusCode::CONFLICT, "no batch is awaiting labels")
        }
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn progress(State(engine): State<Option<Engine>>) -> Response {
    let history = engine.map(|e| e.snapshot().history).unwrap_or_default();
    Json(json!({ "status": "ok", "history": history })).into_response()
}
