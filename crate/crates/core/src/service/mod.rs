//! HTTP API for the web console.
//!
//! | route | purpose |
//! |---|---|
//! | `POST /api/images` | upload a 16-bit PGM or PNG, returns `{id, width, height}` |
//! | `GET /api/images/{id}/original.png` | uploaded image as 16-bit PNG |
//! | `POST /api/segment` | `{id, mode, params}` → [`SegmentResponse`] |
//! | `GET /api/results/{id}/mask.png` | last mask for `id`, 0/65535 PNG |
//! | `GET /api/health` | `{status, version}` |
//!
//! Everything else is served from the static directory when it exists.

mod plot;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

pub use plot::{downsample, PlotBucket, PlotHistogram, MAX_PLOT_BUCKETS};
pub use store::{ImageStore, SessionImage};

use crate::components::Component;
use crate::error::{Error, Result};
use crate::io::{decode_auto, encode, ImageFormat};
use crate::params::{Mode, ParamOverrides, PipelineParams};
use crate::pipeline::{run, ThresholdReport};

pub const DEFAULT_CAPACITY: usize = 32;
pub const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<ImageStore>>,
}

impl AppState {
    pub fn new(capacity: usize) -> Self {
        Self { store: Arc::new(Mutex::new(ImageStore::new(capacity))) }
    }

    fn store(&self) -> MutexGuard<'_, ImageStore> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UploadResponse {
    pub id: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRequest {
    pub id: String,
    pub mode: Mode,
    #[serde(default)]
    pub params: ParamOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingMs {
    pub preprocess: u64,
    pub segment: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResponse {
    pub id: String,
    #[serde(flatten)]
    pub report: ThresholdReport,
    pub histogram: PlotHistogram,
    pub mask_url: String,
    pub timing_ms: TimingMs,
    /// Lesion mode only.
    pub components: Option<Vec<Component>>,
    pub min_area_applied: Option<usize>,
    pub params: PipelineParams,
}

struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, msg: impl ToString) -> Self {
        Self { status, body: json!({ "error": msg.to_string() }) }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoLoft { ref histogram, .. } => {
                let mut err = Self::new(StatusCode::UNPROCESSABLE_ENTITY, &e);
                if let Some(h) = histogram {
                    err.body["histogram"] = json!(downsample(h, None, MAX_PLOT_BUCKETS));
                }
                err
            }
            Error::InvalidParams(_) => Self::new(StatusCode::BAD_REQUEST, e),
            Error::Malformed { .. }
            | Error::Truncated { .. }
            | Error::UnsupportedBitDepth(_)
            | Error::Unsupported(_)
            | Error::InvalidImage(_) => Self::new(StatusCode::BAD_REQUEST, e),
            Error::Io { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, e),
            _ => Self::new(StatusCode::UNPROCESSABLE_ENTITY, e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn not_found(what: &str, id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, format!("{what} {id:?} not found"))
}

fn png_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "version": VERSION }))
}

async fn upload(State(app): State<AppState>, body: Bytes) -> std::result::Result<Json<UploadResponse>, ApiError> {
    let image = tokio::task::spawn_blocking(move || decode_auto(&body))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))??;
    let (width, height) = (image.width(), image.height());
    let entry = app.store().insert(image);
    Ok(Json(UploadResponse { id: entry.id.clone(), width, height }))
}

async fn original(State(app): State<AppState>, Path(id): Path<String>) -> std::result::Result<Response, ApiError> {
    let entry = app.store().get(&id).ok_or_else(|| not_found("image", &id))?;
    let bytes = tokio::task::spawn_blocking(move || encode(&entry.original, ImageFormat::Png16))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))??;
    Ok(png_response(bytes))
}

fn whole_ms(ms: f64) -> u64 {
    ms.round() as u64
}

async fn segment(State(app): State<AppState>, body: Bytes) -> std::result::Result<Json<SegmentResponse>, ApiError> {
    let req: SegmentRequest = serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))?;
    let entry = app.store().get(&req.id).ok_or_else(|| not_found("image", &req.id))?;
    let params = PipelineParams::defaults(req.mode).with_overrides(&req.params)?;
    let image = entry.original.clone();
    let (outcome, png) = tokio::task::spawn_blocking(move || -> Result<_> {
        let outcome = run(&image, &params)?;
        let png = encode(&outcome.mask.to_gray16(), ImageFormat::Png16)?;
        Ok((outcome, png))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))??;
    app.store().set_mask(&entry, png);
    let report = outcome.threshold_report();
    let t = outcome.timing;
    Ok(Json(SegmentResponse {
        id: entry.id.clone(),
        histogram: downsample(&outcome.histogram, Some(report.threshold), MAX_PLOT_BUCKETS),
        report,
        mask_url: format!("/api/results/{}/mask.png", entry.id),
        timing_ms: TimingMs {
            preprocess: whole_ms(t.preprocess_ms),
            segment: whole_ms(t.segment_ms),
            total: whole_ms(t.total_ms),
        },
        min_area_applied: outcome.lesions.as_ref().map(|l| l.min_area_applied),
        components: outcome.lesions.map(|l| l.components),
        params: outcome.params,
    }))
}

async fn mask(State(app): State<AppState>, Path(id): Path<String>) -> std::result::Result<Response, ApiError> {
    let png = app.store().mask(&id).ok_or_else(|| not_found("result for", &id))?;
    Ok(png_response(png.as_ref().clone()))
}

async fn console_missing() -> (StatusCode, &'static str) {
    (StatusCode::NOT_FOUND, "web console not built")
}

/// Builds the router; `static_dir` is served at `/` when it exists.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/images", post(upload).layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)))
        .route("/api/images/{id}/original.png", get(original))
        .route("/api/segment", post(segment))
        .route("/api/results/{id}/mask.png", get(mask))
        .with_state(state);
    match static_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.fallback(console_missing),
    }
}

pub async fn serve(addr: SocketAddr, static_dir: Option<PathBuf>, capacity: usize) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::io(addr.to_string(), e))?;
    let local = listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?;
    println!("listening on http://{local}");
    axum::serve(listener, router(AppState::new(capacity), static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(local.to_string(), e))
}
