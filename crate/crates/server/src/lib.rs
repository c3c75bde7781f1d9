//! HTTP/JSON API over the annotation store, mounted under `/api/v1`.
//!
//! Reads are served from the latest published snapshot. Writes go through a
//! single store guarded by a mutex, need a bearer token naming the annotator
//! and, for edits, the document's lease token in `X-Lease-Token`.

mod error;
pub mod views;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use fw_core::corpus::Span;
use fw_core::metrics::report::{emit_report, ReportFormat};
use fw_core::store::{Appended, Lease, Snapshot, Store, StoreError};
use fw_core::{AsId, ConditionLabel, EditAction, EditEvent, Upos};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;
use serde_json::Value;
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody};
use views::*;

pub const LEASE_HEADER: &str = "x-lease-token";

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot read tokens file {path}: {source}")]
    TokensIo { path: PathBuf, source: std::io::Error },
    #[error("tokens file {path} must map tokens to annotator ids: {source}")]
    TokensFormat { path: PathBuf, source: serde_json::Error },
}

/// Reads a JSON object mapping bearer tokens to annotator ids.
pub fn load_tokens(path: &Path) -> Result<HashMap<String, String>, ServerError> {
    let text = std::fs::read_to_string(path).map_err(|source| ServerError::TokensIo {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ServerError::TokensFormat {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// Bearer token to annotator id.
    pub tokens: HashMap<String, String>,
    /// Directory of static web assets served at `/`.
    pub static_dir: Option<PathBuf>,
}

/// What readers see: the latest snapshot and the lease table as of the
/// last write.
#[derive(Clone)]
struct Published {
    snapshot: Arc<Snapshot>,
    leases: Arc<HashMap<String, Lease>>,
}

impl Published {
    fn of(store: &Store) -> Published {
        Published {
            snapshot: store.snapshot(),
            leases: Arc::new(store.leases().iter().map(|l| (l.doc_id.clone(), l.clone())).collect()),
        }
    }
}

pub struct AppState {
    store: Mutex<Store>,
    published: RwLock<Published>,
    tokens: HashMap<String, String>,
}

impl AppState {
    fn snapshot(&self) -> Arc<Snapshot> {
        self.published.read().snapshot.clone()
    }

    fn annotator(&self, headers: &HeaderMap) -> Result<String, ApiError> {
        headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .and_then(|t| self.tokens.get(t.trim()))
            .cloned()
            .ok_or_else(ApiError::unauthorized)
    }

    /// Runs a store mutation off the async workers, since appends fsync.
    async fn write<T, F>(self: &Arc<Self>, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Store) -> Result<T, StoreError> + Send + 'static,
    {
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let mut store = state.store.lock();
            // Publish even on failure: a rejected write may still renew a lease.
            let out = f(&mut store);
            *state.published.write() = Published::of(&store);
            Ok(out?)
        })
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?
    }
}

pub fn router(store: Store, config: ServerConfig) -> Router {
    let state = Arc::new(AppState {
        published: RwLock::new(Published::of(&store)),
        store: Mutex::new(store),
        tokens: config.tokens,
    });
    let api = Router::new()
        .route("/documents", get(list_documents))
        .route("/documents/{id}/sentences", get(list_sentences))
        .route("/documents/{id}/lease", post(acquire_lease).delete(release_lease))
        .route("/sentences/{id}/annotation-sets", get(list_annotation_sets))
        .route("/annotation-sets", post(create_set))
        .route("/annotation-sets/{id}", patch(edit_set).get(get_set))
        .route("/annotation-sets/{id}/timer", post(timer))
        .route("/framebank/frames", get(search_frames))
        .route("/framebank/frames/{name}", get(frame_detail))
        .route("/reports/{table}", get(report))
        .with_state(state);
    let app = Router::new().nest("/api/v1", api);
    match config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

type Shared = State<Arc<AppState>>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn lease_token(headers: &HeaderMap) -> String {
    headers
        .get(LEASE_HEADER)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_owned()
}

#[derive(Deserialize)]
struct ConditionQuery {
    condition: Option<String>,
}

impl ConditionQuery {
    fn label(&self) -> Result<ConditionLabel, ApiError> {
        match &self.condition {
            None => Ok(ConditionLabel::MachineHuman),
            Some(c) => c.parse().map_err(|e: fw_core::metrics::UnknownCondition| ApiError::bad_request(e.to_string())),
        }
    }
}

async fn list_documents(State(state): Shared) -> Json<Vec<DocumentSummary>> {
    let Published { snapshot: snap, leases } = state.published.read().clone();
    let now = Utc::now();
    let docs = snap
        .corpus
        .documents()
        .iter()
        .map(|d| DocumentSummary::new(&snap, d, leases.get(&d.id).filter(|l| l.is_valid_at(now))))
        .collect();
    Json(docs)
}

async fn list_sentences(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ConditionQuery>,
) -> Result<Response, ApiError> {
    let label = q.label()?;
    let snap = state.snapshot();
    let doc = snap
        .corpus
        .document(&id)
        .ok_or_else(|| ApiError::from(StoreError::UnknownDocument(id.clone())))?;
    let views: Vec<SentenceView> = doc.sentences.iter().map(|s| SentenceView::new(&snap, label, s)).collect();
    Ok(Json(views).into_response())
}

async fn list_annotation_sets(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ConditionQuery>,
) -> Result<Response, ApiError> {
    let label = q.label()?;
    let snap = state.snapshot();
    if snap.corpus.sentence(&id).is_none() {
        return Err(StoreError::UnknownSentence(id).into());
    }
    let views: Vec<AnnotationSetView> = snap
        .condition(label)
        .sets_in_sentence(&id)
        .map(|s| AnnotationSetView::new(&snap, label, s))
        .collect();
    Ok(Json(views).into_response())
}

async fn get_set(State(state): Shared, UrlPath(id): UrlPath<u64>) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    let (label, set) = snap.find(AsId(id)).ok_or(StoreError::UnknownAs(AsId(id)))?;
    Ok(Json(AnnotationSetView::new(&snap, label, set)).into_response())
}

fn appended(state: &AppState, out: Appended, status: StatusCode) -> Response {
    let snap = state.snapshot();
    let view = AppendView {
        seq: out.seq,
        as_id: out.as_id,
        replayed: out.replayed,
        annotation_set: snap.find(out.as_id).map(|(l, s)| AnnotationSetView::new(&snap, l, s)),
    };
    (status, Json(view)).into_response()
}

#[derive(Deserialize)]
struct CreateBody {
    document_id: String,
    sentence_id: String,
    target: Span,
    frame: String,
    /// Recovered from the tokens under `target` when omitted.
    lemma: Option<String>,
    pos: Option<Upos>,
    timestamp: Option<DateTime<Utc>>,
    idempotency_key: Option<String>,
}

async fn create_set(
    State(state): Shared,
    headers: HeaderMap,
    payload: Result<Json<CreateBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let annotator = state.annotator(&headers)?;
    let b = body(payload)?;
    let (lemma, pos) = match (b.lemma, b.pos) {
        (Some(lemma), Some(pos)) => (lemma, pos),
        _ => {
            let snap = state.snapshot();
            let sentence = snap
                .corpus
                .sentence(&b.sentence_id)
                .ok_or_else(|| ApiError::from(StoreError::UnknownSentence(b.sentence_id.clone())))?;
            sentence.span_lemma_pos(b.target).map_err(|e| {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
            })?
        }
    };
    let action = EditAction::Create {
        document_id: b.document_id,
        sentence_id: b.sentence_id,
        target: b.target,
        frame: b.frame,
        lemma,
        pos,
    };
    let event = EditEvent::new(AsId(0), annotator, action, b.timestamp.unwrap_or_else(Utc::now));
    let token = lease_token(&headers);
    let key = b.idempotency_key;
    let out = state.write(move |s| s.append(event, &token, key, Utc::now())).await?;
    let status = if out.replayed { StatusCode::OK } else { StatusCode::CREATED };
    Ok(appended(&state, out, status))
}

#[derive(Deserialize)]
struct EditBody {
    action: String,
    #[serde(default)]
    payload: Value,
    timestamp: Option<DateTime<Utc>>,
    idempotency_key: Option<String>,
}

/// Turns `{action: "add_fe", payload: {...}}` into a review action. Only
/// content and decision actions are accepted here.
fn parse_action(action: &str, payload: Value) -> Result<EditAction, ApiError> {
    const ALLOWED: [&str; 6] = ["accept", "delete", "replace_frame", "add_fe", "remove_fe", "set_ni"];
    let name = action.to_ascii_lowercase();
    if !ALLOWED.contains(&name.as_str()) {
        return Err(ApiError::bad_request(format!(
            "unknown action {action:?}; expected one of {}",
            ALLOWED.join(", ")
        )));
    }
    let mut tagged = serde_json::Map::new();
    tagged.insert("kind".into(), Value::String(name.to_ascii_uppercase()));
    if !payload.is_null() {
        tagged.insert("payload".into(), payload);
    }
    serde_json::from_value(Value::Object(tagged)).map_err(|e| ApiError::bad_request(format!("bad {action} payload: {e}")))
}

async fn edit_set(
    State(state): Shared,
    UrlPath(id): UrlPath<u64>,
    headers: HeaderMap,
    payload: Result<Json<EditBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let annotator = state.annotator(&headers)?;
    let b = body(payload)?;
    let action = parse_action(&b.action, b.payload)?;
    let event = EditEvent::new(AsId(id), annotator, action, b.timestamp.unwrap_or_else(Utc::now));
    let token = lease_token(&headers);
    let key = b.idempotency_key;
    let out = state.write(move |s| s.append(event, &token, key, Utc::now())).await?;
    Ok(appended(&state, out, StatusCode::OK))
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum TimerAction {
    Start,
    Stop,
}

#[derive(Deserialize)]
struct TimerBody {
    action: TimerAction,
    timestamp: DateTime<Utc>,
    idempotency_key: Option<String>,
}

async fn timer(
    State(state): Shared,
    UrlPath(id): UrlPath<u64>,
    headers: HeaderMap,
    payload: Result<Json<TimerBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let annotator = state.annotator(&headers)?;
    let b = body(payload)?;
    let action = match b.action {
        TimerAction::Start => EditAction::TimerStart,
        TimerAction::Stop => EditAction::TimerStop,
    };
    let event = EditEvent::new(AsId(id), annotator, action, b.timestamp);
    let token = lease_token(&headers);
    let key = b.idempotency_key;
    let out = state.write(move |s| s.append(event, &token, key, Utc::now())).await?;
    Ok(appended(&state, out, StatusCode::OK))
}

async fn acquire_lease(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let annotator = state.annotator(&headers)?;
    let lease = state.write(move |s| s.acquire_lease(&id, &annotator, Utc::now())).await?;
    Ok(Json(lease).into_response())
}

async fn release_lease(
    State(state): Shared,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Result<StatusCode, ApiError> {
    state.annotator(&headers)?;
    let token = lease_token(&headers);
    state.write(move |s| s.release_lease(&id, &token)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct SearchQuery {
    #[serde(default)]
    query: String,
    limit: Option<usize>,
}

async fn search_frames(State(state): Shared, Query(q): Query<SearchQuery>) -> Response {
    let snap = state.snapshot();
    let hits: Vec<FrameSummary> = snap
        .bank
        .search_frames(&q.query)
        .into_iter()
        .take(q.limit.unwrap_or(50))
        .map(FrameSummary::from)
        .collect();
    Json(hits).into_response()
}

async fn frame_detail(State(state): Shared, UrlPath(name): UrlPath<String>) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    let frame = snap
        .bank
        .frame(&name)
        .ok_or_else(|| ApiError::not_found("UNKNOWN_FRAME", format!("unknown frame {name}")))?;
    Ok(Json(FrameDetail::from(frame)).into_response())
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
    /// Comma-separated condition names; all three when omitted.
    conditions: Option<String>,
}

async fn report(
    State(state): Shared,
    UrlPath(table): UrlPath<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    let n: u8 = table
        .strip_prefix("table")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| ApiError::not_found("UNKNOWN_TABLE", format!("no report named {table}")))?;
    let format: ReportFormat = q
        .format
        .as_deref()
        .unwrap_or("csv")
        .parse()
        .map_err(ApiError::bad_request)?;
    let labels: Vec<ConditionLabel> = match q.conditions.as_deref() {
        None | Some("") => ConditionLabel::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|c| c.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|e: fw_core::metrics::UnknownCondition| ApiError::bad_request(e.to_string()))?,
    };
    let table = state.snapshot().report(n, &labels)?;
    let content_type = match format {
        ReportFormat::Csv => "text/csv; charset=utf-8",
        ReportFormat::Markdown => "text/markdown; charset=utf-8",
        ReportFormat::Json => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], Body::from(emit_report(&table, format))).into_response())
}
