//! Axum routes over [`AuthService`].

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use uuid::Uuid;

use crate::error::ServiceError;
use crate::service::AuthService;
use crate::session::{Metrics, SessionRecord};
use crate::wire::{
    AnswerRequest, AnswerResponse, LoginRequest, LoginResponse, PairRequest, PairResponse,
    RenderedRequest, DEVICE_ID_HEADER, DEVICE_SECRET_HEADER,
};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            ServiceError::Auth => (StatusCode::UNAUTHORIZED, "auth"),
            ServiceError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::Session { .. } => (StatusCode::CONFLICT, "session"),
            ServiceError::InvalidAnswer(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_answer"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Config(_) | ServiceError::Io { .. } | ServiceError::Core(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        let message = if status.is_server_error() {
            "internal error".to_string()
        } else {
            self.to_string()
        };
        (status, Json(json!({ "error": kind, "message": message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

fn device(headers: &HeaderMap) -> ApiResult<(&str, &str)> {
    let get = |name| headers.get(name).and_then(|v| v.to_str().ok());
    match (get(DEVICE_ID_HEADER), get(DEVICE_SECRET_HEADER)) {
        (Some(id), Some(secret)) => Ok((id, secret)),
        _ => Err(ServiceError::Auth),
    }
}

async fn pair(
    State(svc): State<Arc<AuthService>>,
    Json(req): Json<PairRequest>,
) -> ApiResult<(StatusCode, Json<PairResponse>)> {
    let record = svc.pair(&req.device_id, &req.credential)?;
    Ok((
        StatusCode::CREATED,
        Json(PairResponse {
            device_id: record.device_id,
            shared_secret: record.shared_secret,
            created_at_ms: record.created_at_ms,
        }),
    ))
}

async fn login(
    State(svc): State<Arc<AuthService>>,
    headers: HeaderMap,
    Json(req): Json<LoginRequest>,
) -> ApiResult<Json<LoginResponse>> {
    let (id, secret) = device(&headers)?;
    Ok(Json(svc.request_login(id, secret, req.format, req.corpus.as_deref())?))
}

async fn rendered(
    State(svc): State<Arc<AuthService>>,
    headers: HeaderMap,
    Json(req): Json<RenderedRequest>,
) -> ApiResult<StatusCode> {
    let (id, secret) = device(&headers)?;
    svc.rendered(id, secret, req.session_id, req.challenge_id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn answer(
    State(svc): State<Arc<AuthService>>,
    headers: HeaderMap,
    Json(req): Json<AnswerRequest>,
) -> ApiResult<Json<AnswerResponse>> {
    let (id, secret) = device(&headers)?;
    Ok(Json(svc.submit_answer(id, secret, &req)?))
}

async fn session(
    State(svc): State<Arc<AuthService>>,
    headers: HeaderMap,
    Path(session_id): Path<Uuid>,
) -> ApiResult<Json<SessionRecord>> {
    let (id, secret) = device(&headers)?;
    Ok(Json(svc.session_metrics(id, secret, session_id)?))
}

async fn metrics(State(svc): State<Arc<AuthService>>) -> Json<Metrics> {
    Json(svc.metrics())
}

async fn image(
    State(svc): State<Arc<AuthService>>,
    Path((challenge_id, slot)): Path<(Uuid, usize)>,
) -> ApiResult<Response> {
    let bytes = svc.image(challenge_id, slot)?;
    let mime = if bytes.starts_with(b"\x89PNG") { "image/png" } else { "image/jpeg" };
    Ok((
        [(header::CONTENT_TYPE, mime), (header::CACHE_CONTROL, "no-store")],
        bytes,
    )
        .into_response())
}

pub fn router(service: Arc<AuthService>) -> Router {
    Router::new()
        .route("/pair", post(pair))
        .route("/login", post(login))
        .route("/rendered", post(rendered))
        .route("/answer", post(answer))
        .route("/session/{id}", get(session))
        .route("/metrics", get(metrics))
        .route("/image/{challenge_id}/{slot}", get(image))
        .with_state(service)
}

/// Serves until the listener fails.
pub async fn serve(service: Arc<AuthService>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
