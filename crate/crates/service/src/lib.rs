//! Local HTTP service in front of the capture store.
//!
//! | Method | Path                          | Body / query                 |
//! |--------|-------------------------------|------------------------------|
//! | POST   | `/api/drafts`                 | [`DraftRequest`]             |
//! | POST   | `/api/captures`               | [`SaveRequest`]              |
//! | GET    | `/api/captures`               | `?q=keywords&sort=recent_only` |
//! | GET    | `/api/captures/{id}`          |                              |
//! | PATCH  | `/api/captures/{id}`          | [`FieldUpdate`]              |
//! | POST   | `/api/captures/{id}/reopen`   | [`ReopenRequest`] (optional) |
//! | DELETE | `/api/captures/{id}`          |                              |
//! | GET    | `/images/{id}.png`            |                              |
//! | GET    | `/`                           | web UI                       |
//!
//! Errors are always JSON [`ApiError`] bodies.

mod error;

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Duration, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use snapmark_core::model::{apply_user_edits, is_safe_id, CaptureEdits, CaptureMode, CaptureRecord, ListedCapture};
use snapmark_core::platform::{
    capture_draft, execute_restore, plan_restore, Executor, RestorePlan, Scenario, ScriptRegistry,
    SimulatedProvider, WindowProvider,
};
use snapmark_core::store::{FieldUpdate, SearchQuery, SortSpec, Store};
use snapmark_core::visibility::{Rect, VisibilityConfig};

pub use error::ApiError;

/// Default lifetime of an unsaved draft.
pub const DRAFT_TTL_MINUTES: i64 = 10;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;
pub type SharedProvider = Arc<dyn WindowProvider + Send + Sync>;

pub struct AppState {
    store: Arc<Store>,
    provider: SharedProvider,
    executor: Arc<dyn Executor>,
    registry: Arc<ScriptRegistry>,
    visibility: VisibilityConfig,
    draft_ttl: Duration,
    drafts: Mutex<HashMap<String, PendingDraft>>,
    ui_dir: Option<PathBuf>,
    clock: Clock,
}

struct PendingDraft {
    record: CaptureRecord,
    image_png: Vec<u8>,
    expires_at: DateTime<Utc>,
}

impl AppState {
    pub fn new(
        store: Arc<Store>,
        provider: SharedProvider,
        executor: Arc<dyn Executor>,
        registry: ScriptRegistry,
    ) -> Self {
        AppState {
            store,
            provider,
            executor,
            registry: Arc::new(registry),
            visibility: VisibilityConfig::default(),
            draft_ttl: Duration::minutes(DRAFT_TTL_MINUTES),
            drafts: Mutex::new(HashMap::new()),
            ui_dir: None,
            clock: Arc::new(Utc::now),
        }
    }

    pub fn with_visibility(mut self, cfg: VisibilityConfig) -> Self {
        self.visibility = cfg;
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_draft_ttl(mut self, ttl: Duration) -> Self {
        self.draft_ttl = ttl;
        self
    }

    /// Serve the built web UI from this directory instead of the placeholder.
    pub fn with_ui_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.ui_dir = Some(dir.into());
        self
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn pending_drafts(&self) -> usize {
        self.lock_drafts().len()
    }

    fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    fn lock_drafts(&self) -> std::sync::MutexGuard<'_, HashMap<String, PendingDraft>> {
        self.drafts.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Drops expired drafts together with their images.
    fn sweep_drafts(&self, now: DateTime<Utc>) {
        self.lock_drafts().retain(|id, d| {
            let keep = d.expires_at > now;
            if !keep {
                log::debug!("draft {id} expired");
            }
            keep
        });
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/assets/{*path}", get(asset))
        .route("/api/drafts", post(create_draft))
        .route("/api/captures", post(save_capture).get(list_captures))
        .route(
            "/api/captures/{id}",
            get(get_capture).patch(patch_capture).delete(delete_capture),
        )
        .route("/api/captures/{id}/reopen", post(reopen_capture))
        .route("/images/{file}", get(image))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

/// Binds to `addr` and serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_listener(state, listener).await
}

pub async fn serve_listener(
    state: Arc<AppState>,
    listener: tokio::net::TcpListener,
) -> std::io::Result<()> {
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn parse_json<T: DeserializeOwned + Default>(body: &Bytes, allow_empty: bool) -> Result<T, ApiError> {
    if allow_empty && body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftRequest {
    pub mode: Option<CaptureMode>,
    pub region: Option<Rect>,
    /// Inline scenario document used instead of the configured provider.
    pub scenario_override: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftResponse {
    pub draft_id: String,
    pub image_url: String,
    pub expires_at: String,
    pub record: CaptureRecord,
}

pub fn image_url(capture_id: &str) -> String {
    format!("/images/{capture_id}.png")
}

async fn create_draft(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<DraftResponse>), ApiError> {
    let req: DraftRequest = parse_json(&body, false)?;
    let mode = req.mode.unwrap_or(CaptureMode::FullScreen);
    let now = state.now();
    let draft = match req.scenario_override {
        Some(doc) => {
            let provider = SimulatedProvider::new(Scenario::from_json_value(doc)?);
            capture_draft(&provider, mode, req.region, state.visibility, now)?
        }
        None => capture_draft(state.provider.as_ref(), mode, req.region, state.visibility, now)?,
    };
    state.sweep_drafts(now);
    let expires_at = now + state.draft_ttl;
    let resp = DraftResponse {
        draft_id: draft.record.capture_id.clone(),
        image_url: image_url(&draft.record.capture_id),
        expires_at: expires_at.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        record: draft.record.clone(),
    };
    state.lock_drafts().insert(
        draft.record.capture_id.clone(),
        PendingDraft {
            record: draft.record,
            image_png: draft.image_png,
            expires_at,
        },
    );
    Ok((StatusCode::CREATED, Json(resp)))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaveRequest {
    pub draft_id: String,
    #[serde(default)]
    pub edits: CaptureEdits,
}

async fn save_capture(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<CaptureRecord>), ApiError> {
    let req: SaveRequest = parse_json(&body, false)?;
    state.sweep_drafts(state.now());
    // Validate the edits before consuming the draft so a bad request can be retried.
    let (record, image) = {
        let mut drafts = state.lock_drafts();
        let pending = drafts
            .get(&req.draft_id)
            .ok_or_else(|| ApiError::not_found(format!("draft {:?} not found or expired", req.draft_id)))?;
        let record = apply_user_edits(&pending.record, &req.edits)?;
        let pending = drafts.remove(&req.draft_id).expect("draft present under lock");
        (record, pending.image_png)
    };
    state.store.save(&record, &image)?;
    Ok((StatusCode::CREATED, Json(record)))
}

fn listed(records: Vec<CaptureRecord>, now: DateTime<Utc>) -> Vec<ListedCapture> {
    records.into_iter().map(|r| ListedCapture::new(r, now)).collect()
}

fn parse_sort(raw: Option<&String>) -> Result<SortSpec, ApiError> {
    match raw.map(String::as_str) {
        None | Some("") | Some("liked_first_then_recent") => Ok(SortSpec::LikedFirstThenRecent),
        Some("recent_only") => Ok(SortSpec::RecentOnly),
        Some(other) => Err(ApiError::bad_request(
            "invalid_query",
            format!("unknown sort {other:?}"),
        )),
    }
}

async fn list_captures(
    State(state): State<Arc<AppState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<Vec<ListedCapture>>, ApiError> {
    let sort = parse_sort(params.get("sort"))?;
    let records = match params.get("q") {
        Some(q) => state.store.search(&SearchQuery::parse(q), sort),
        None => state.store.list_sorted(sort),
    };
    Ok(Json(listed(records, state.now())))
}

async fn get_capture(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<ListedCapture>, ApiError> {
    let rec = state.store.get(&id)?;
    Ok(Json(ListedCapture::new(rec, state.now())))
}

async fn patch_capture(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<CaptureRecord>, ApiError> {
    let update: FieldUpdate = parse_json(&body, true)?;
    Ok(Json(state.store.update_fields(&id, &update)?))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReopenRequest {
    pub resource_ids: Option<BTreeSet<String>>,
}

async fn reopen_capture(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<RestorePlan>, ApiError> {
    let req: ReopenRequest = parse_json(&body, true)?;
    let rec = state.store.get(&id)?;
    let plan = plan_restore(&rec, req.resource_ids.as_ref(), &state.registry)?;
    let actions = execute_restore(plan.actions, state.executor.as_ref());
    Ok(Json(RestorePlan {
        actions,
        skipped: plan.skipped,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeleteResponse {
    pub deleted: String,
}

async fn delete_capture(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<DeleteResponse>, ApiError> {
    state.store.delete(&id)?;
    Ok(Json(DeleteResponse { deleted: id }))
}

async fn image(
    State(state): State<Arc<AppState>>,
    Path(file): Path<String>,
) -> Result<Response, ApiError> {
    let id = file
        .strip_suffix(".png")
        .filter(|id| is_safe_id(id))
        .ok_or_else(|| ApiError::not_found(format!("no image {file:?}")))?;
    let bytes = if state.store.contains(id) {
        state.store.read_image(id)?
    } else {
        state.sweep_drafts(state.now());
        state
            .lock_drafts()
            .get(id)
            .map(|d| d.image_png.clone())
            .ok_or_else(|| ApiError::not_found(format!("no image for {id:?}")))?
    };
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

const PLACEHOLDER_UI: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>snapmark</title></head>
<body>
<h1>snapmark</h1>
<p>The web UI is not installed. Start the service with <code>--ui-dir</code> pointing at the built UI,
or use the JSON API under <a href=\"/api/captures\">/api/captures</a>.</p>
</body></html>
";

async fn index(State(state): State<Arc<AppState>>) -> Response {
    if let Some(dir) = &state.ui_dir {
        if let Ok(html) = std::fs::read_to_string(dir.join("index.html")) {
            return Html(html).into_response();
        }
    }
    Html(PLACEHOLDER_UI).into_response()
}

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

async fn asset(
    State(state): State<Arc<AppState>>,
    Path(path): Path<String>,
) -> Result<Response, ApiError> {
    let dir = state
        .ui_dir
        .as_ref()
        .ok_or_else(|| ApiError::not_found("web UI not installed"))?;
    let rel = PathBuf::from(&path);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ApiError::not_found(format!("no asset {path:?}")));
    }
    let full = dir.join("assets").join(&rel);
    let bytes = std::fs::read(&full).map_err(|_| ApiError::not_found(format!("no asset {path:?}")))?;
    Ok(([(header::CONTENT_TYPE, content_type(&full))], bytes).into_response())
}
