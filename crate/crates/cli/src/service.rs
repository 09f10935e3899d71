//! Stateless HTTP render and pick service.
//!
//! Every request carries a complete scene document; the server only holds the
//! datasets preloaded at startup.

use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use carve_core::io::buffers::{encode_pfm, encode_pgm16, encode_png};
use carve_core::io::SceneError;
use carve_core::render::RenderError;
use carve_core::session::pick;
use carve_core::volume::VolumeError;
use carve_core::{FrameSet, PreparedVolume, Scene};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::registry::{DatasetInfo, Registry, RegistryError};

/// Boundary of multipart render responses.
pub const BOUNDARY: &str = "carve-frame-boundary";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl From<SceneError> for ServiceError {
    fn from(e: SceneError) -> Self {
        ServiceError::BadRequest(e.to_string())
    }
}

impl From<RegistryError> for ServiceError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::OutsideRoot(_) | RegistryError::Unknown(_) => ServiceError::NotFound(e.to_string()),
            RegistryError::NotLabels(_) | RegistryError::Volume(_) => ServiceError::Unprocessable(e.to_string()),
            RegistryError::Scan { .. } => ServiceError::Internal(e.to_string()),
        }
    }
}

impl From<RenderError> for ServiceError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Volume(VolumeError::DimsMismatch(..)) => ServiceError::Unprocessable(e.to_string()),
            RenderError::Clip(_) | RenderError::Camera(_) | RenderError::Params(_) | RenderError::Pose => {
                ServiceError::BadRequest(e.to_string())
            }
            _ => ServiceError::Internal(e.to_string()),
        }
    }
}

pub struct AppState {
    registry: Registry,
    pool: rayon::ThreadPool,
}

impl AppState {
    pub fn new(registry: Registry, threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { registry, pool })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Renders a scene on the service pool.
    pub fn render(&self, scene: &Scene) -> Result<FrameSet, ServiceError> {
        let dataset = self.registry.dataset_for(scene)?;
        Ok(self.pool.install(|| carve_core::render(scene, &dataset))?)
    }

    pub fn pick(&self, req: &PickRequest) -> Result<PickResponse, ServiceError> {
        let scene = Scene::from_value(req.scene.clone())?;
        let [x, y] = req.pixel;
        if x >= scene.camera.width || y >= scene.camera.height {
            return Err(ServiceError::BadRequest(format!(
                "pixel ({x}, {y}) outside a {}x{} image",
                scene.camera.width, scene.camera.height
            )));
        }
        scene.camera.validate().map_err(RenderError::from)?;
        let dataset = self.registry.dataset_for(&scene)?;
        let result = self.pool.install(|| {
            let prepared = PreparedVolume::for_scene(&scene, &dataset)?;
            Ok::<_, RenderError>(pick(&prepared, &scene.camera.basis().ray(x, y), &scene.render))
        })?;
        let name = result.label.and_then(|l| dataset.colors.get(l)).map(|e| e.name.clone());
        let clippable = match (result.label, scene.spheres.last()) {
            (Some(l), Some(active)) => Some(active.mask.contains(l)),
            _ => None,
        };
        Ok(PickResponse { label: result.label, name, position: result.position, clippable })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PickRequest {
    pub scene: serde_json::Value,
    pub pixel: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickResponse {
    pub label: Option<u16>,
    pub name: Option<String>,
    pub position: Option<[f64; 3]>,
    /// Whether the active (last) sphere's mask clips the picked label.
    pub clippable: Option<bool>,
}

#[derive(Debug, Deserialize)]
pub struct RenderQuery {
    pub buffer: Option<String>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/render", post(render_handler))
        .route("/pick", post(pick_handler))
        .route("/datasets", get(datasets_handler))
        .with_state(state)
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn render_handler(
    State(state): State<Arc<AppState>>,
    Query(query): Query<RenderQuery>,
    body: axum::body::Bytes,
) -> Result<Response, ServiceError> {
    let buffer = query.buffer;
    if let Some(b) = &buffer {
        if !matches!(b.as_str(), "color" | "depth" | "seg") {
            return Err(ServiceError::BadRequest(format!("unknown buffer {b:?}")));
        }
    }
    let value: serde_json::Value = parse_json(&body)?;
    let scene = Scene::from_value(value)?;
    let frame = blocking(move || state.render(&scene)).await?;
    let parts = encode_parts(&frame)?;
    Ok(match buffer {
        Some(name) => {
            let (_, mime, bytes) = parts.into_iter().find(|p| p.0 == name).expect("validated above");
            ([(header::CONTENT_TYPE, mime)], bytes).into_response()
        }
        None => (
            [(header::CONTENT_TYPE, format!("multipart/mixed; boundary={BOUNDARY}"))],
            multipart_body(&parts),
        )
            .into_response(),
    })
}

fn encode_parts(frame: &FrameSet) -> Result<Vec<(&'static str, &'static str, Vec<u8>)>, ServiceError> {
    let png = encode_png(&frame.color).map_err(|e| ServiceError::Internal(e.to_string()))?;
    Ok(vec![
        ("color", "image/png", png),
        ("depth", "image/x-portable-floatmap", encode_pfm(&frame.depth)),
        ("seg", "image/x-portable-graymap", encode_pgm16(&frame.seg)),
    ])
}

/// Serializes named parts as a `multipart/mixed` body delimited by [`BOUNDARY`].
pub fn multipart_body(parts: &[(&str, &str, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::new();
    for (name, mime, bytes) in parts {
        out.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        out.extend_from_slice(format!("Content-Disposition: form-data; name=\"{name}\"\r\n").as_bytes());
        out.extend_from_slice(format!("Content-Type: {mime}\r\n").as_bytes());
        out.extend_from_slice(format!("Content-Length: {}\r\n\r\n", bytes.len()).as_bytes());
        out.extend_from_slice(bytes);
        out.extend_from_slice(b"\r\n");
    }
    out.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    out
}

/// Splits a body produced by [`multipart_body`] back into `(name, bytes)` parts.
pub fn parse_multipart(body: &[u8]) -> Option<Vec<(String, Vec<u8>)>> {
    let mut parts = Vec::new();
    let mut rest = body;
    let open = format!("--{BOUNDARY}\r\n");
    while let Some(after) = rest.strip_prefix(open.as_bytes()) {
        let header_end = after.windows(4).position(|w| w == b"\r\n\r\n")?;
        let headers = std::str::from_utf8(&after[..header_end]).ok()?;
        let mut name = None;
        let mut len = None;
        for line in headers.split("\r\n") {
            if let Some(v) = line.strip_prefix("Content-Disposition: form-data; name=\"") {
                name = v.strip_suffix('"').map(str::to_string);
            } else if let Some(v) = line.strip_prefix("Content-Length: ") {
                len = v.parse::<usize>().ok();
            }
        }
        let data = &after[header_end + 4..];
        let len = len?;
        parts.push((name?, data.get(..len)?.to_vec()));
        rest = data.get(len..)?.strip_prefix(b"\r\n")?;
    }
    (rest == format!("--{BOUNDARY}--\r\n").as_bytes()).then_some(parts)
}

async fn pick_handler(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Result<Response, ServiceError> {
    let req: PickRequest = parse_json(&body)?;
    let resp = blocking(move || state.pick(&req)).await?;
    Ok(Json(resp).into_response())
}

async fn datasets_handler(State(state): State<Arc<AppState>>) -> Json<Vec<DatasetInfo>> {
    Json(state.registry.datasets().to_vec())
}
