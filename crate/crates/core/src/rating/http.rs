//! JSON-over-HTTP surface of the rating service.
//!
//! | method | path | body / response |
//! |---|---|---|
//! | `POST` | `/api/sessions` | `{evaluator_id, stage}` → [`SessionDescriptor`] |
//! | `GET` | `/api/sessions/{evaluator}/{stage}/next` | → [`NextItemResponse`] |
//! | `POST` | `/api/sessions/{evaluator}/{stage}/ratings` | [`RatingRequest`] → [`Acknowledgment`] |
//! | `GET` | `/api/progress/{evaluator}` | → [`ProgressResponse`] |
//!
//! Errors are `{ "error": <code>, "message": <text> }` with a 4xx status.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::service::{Acknowledgment, ImageBlob, NextItem, RatingService, ScoreTriple, StageProgress};
use super::RatingError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpenSessionRequest {
    pub evaluator_id: String,
    pub stage: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub evaluator_id: String,
    pub stage: u32,
    pub stage_count: u32,
    pub order: Vec<String>,
    pub cursor: usize,
    pub stage_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedImage {
    pub mime: String,
    pub data_base64: String,
}

impl EncodedImage {
    pub fn decode(&self) -> Result<Vec<u8>, base64::DecodeError> {
        base64::engine::general_purpose::STANDARD.decode(&self.data_base64)
    }
}

impl From<&ImageBlob> for EncodedImage {
    fn from(blob: &ImageBlob) -> Self {
        Self {
            mime: blob.mime.to_string(),
            data_base64: base64::engine::general_purpose::STANDARD.encode(&blob.bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextItemResponse {
    Item {
        image_id: String,
        position: usize,
        stage_size: usize,
        text_prompt: String,
        image: EncodedImage,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<EncodedImage>,
    },
    Complete {
        rated: usize,
        stage_size: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingRequest {
    pub image_id: String,
    pub quality: f64,
    pub authenticity: f64,
    pub correspondence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressResponse {
    pub evaluator_id: String,
    pub stages: Vec<StageProgress>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for RatingError {
    fn into_response(self) -> Response {
        let status = match &self {
            RatingError::UnknownEvaluator(_) => StatusCode::NOT_FOUND,
            RatingError::StageOutOfRange { .. } => StatusCode::NOT_FOUND,
            RatingError::Score(_) => StatusCode::UNPROCESSABLE_ENTITY,
            RatingError::Duplicate { .. } | RatingError::OutOfOrder { .. } | RatingError::StageComplete { .. } => {
                StatusCode::CONFLICT
            }
            RatingError::Store(_) | RatingError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<RatingService>;

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/api/sessions", post(open_session))
        .route("/api/sessions/{evaluator}/{stage}/next", get(next_item))
        .route("/api/sessions/{evaluator}/{stage}/ratings", post(submit_rating))
        .route("/api/progress/{evaluator}", get(progress))
        .with_state(service)
}

// Handlers run the blocking service calls (file reads, fsync) off the
// async workers.
async fn blocking<T, F>(f: F) -> Result<T, RatingError>
where
    F: FnOnce() -> Result<T, RatingError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| RatingError::Store(format!("worker failed: {e}")))?
}

async fn open_session(
    State(svc): State<Shared>,
    Json(req): Json<OpenSessionRequest>,
) -> Result<Json<SessionDescriptor>, RatingError> {
    let stage_count = svc.stage_count();
    let session = blocking(move || svc.open_session(&req.evaluator_id, req.stage)).await?;
    Ok(Json(SessionDescriptor {
        stage_size: session.order.len(),
        evaluator_id: session.evaluator_id,
        stage: session.stage,
        stage_count,
        order: session.order,
        cursor: session.cursor,
    }))
}

async fn next_item(
    State(svc): State<Shared>,
    Path((evaluator, stage)): Path<(String, u32)>,
) -> Result<Json<NextItemResponse>, RatingError> {
    let next = blocking(move || svc.next_item(&evaluator, stage)).await?;
    Ok(Json(match next {
        NextItem::Item(item) => NextItemResponse::Item {
            image: EncodedImage::from(&item.image),
            reference: item.reference.as_ref().map(EncodedImage::from),
            image_id: item.image_id,
            position: item.position,
            stage_size: item.stage_size,
            text_prompt: item.text_prompt,
        },
        NextItem::Complete { rated, stage_size } => NextItemResponse::Complete { rated, stage_size },
    }))
}

async fn submit_rating(
    State(svc): State<Shared>,
    Path((evaluator, stage)): Path<(String, u32)>,
    Json(req): Json<RatingRequest>,
) -> Result<Json<Acknowledgment>, RatingError> {
    let scores = ScoreTriple {
        quality: req.quality,
        authenticity: req.authenticity,
        correspondence: req.correspondence,
    };
    let ack = blocking(move || svc.submit_rating(&evaluator, stage, &req.image_id, scores)).await?;
    Ok(Json(ack))
}

async fn progress(
    State(svc): State<Shared>,
    Path(evaluator): Path<String>,
) -> Result<Json<ProgressResponse>, RatingError> {
    let id = evaluator.clone();
    let stages = blocking(move || svc.progress(&id)).await?;
    Ok(Json(ProgressResponse {
        evaluator_id: evaluator,
        stages,
    }))
}

/// Binds `listen` and serves until Ctrl-C.
pub async fn serve(service: RatingService, listen: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("rating service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(service)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
