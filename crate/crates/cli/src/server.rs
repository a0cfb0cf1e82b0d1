//! HTTP service over the session store and a single-worker run queue.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;
use tower_http::services::ServeDir;
use vizlab_core::catalog::Catalog;
use vizlab_core::telemetry::{export_session, import_session, session_from_json, session_path, Session};
use vizlab_core::templates::TemplateId;

use crate::analyze::{compare_json, multiples_json, parse_metric, threshold_json, to_json, window, DEFAULT_POINTS};
use crate::bench::{precheck, run_request, BenchOptions, RunRequest};
use crate::datasets::{list_datasets, load_scene, DataConfig};
use crate::error::CliError;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_QUEUE_CAPACITY: usize = 16;

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>vizlab</title></head>\n<body><h1>vizlab</h1><p>No dashboard assets configured. The JSON API is under <code>/catalog</code>, <code>/datasets</code>, <code>/sessions</code>, <code>/runs</code> and <code>/analytics</code>.</p></body></html>\n";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub data: DataConfig,
    /// Session store; one `<id>.json` per session.
    pub out_dir: PathBuf,
    pub assets: Option<PathBuf>,
    pub queue_capacity: usize,
    pub bench: BenchOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub id: String,
    pub status: RunState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Job {
    id: String,
    request: RunRequest,
    template: TemplateId,
}

pub struct AppState {
    config: ServerConfig,
    runs: Mutex<BTreeMap<String, RunStatus>>,
    next_run: AtomicU64,
    queue: mpsc::Sender<Job>,
}

impl AppState {
    fn set(&self, id: &str, status: RunState, session_id: Option<String>, error: Option<String>) {
        let mut runs = self.runs.lock().expect("run table poisoned");
        runs.insert(id.to_string(), RunStatus { id: id.to_string(), status, session_id, error });
    }

    fn session_file(&self, id: &str) -> Option<PathBuf> {
        let valid = !id.is_empty()
            && !id.starts_with('.')
            && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        let path = self.config.out_dir.join(format!("{id}.json"));
        (valid && path.is_file()).then_some(path)
    }

    fn load(&self, id: &str) -> Result<Session, ApiError> {
        let path = self.session_file(id).ok_or_else(|| ApiError::not_found(format!("unknown session '{id}'")))?;
        import_session(&path).map_err(|e| ApiError::internal(e.to_string()))
    }

    fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = fs::read_dir(&self.config.out_dir)
            .into_iter()
            .flatten()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
            .filter(|id| !id.starts_with('.'))
            .collect();
        ids.sort();
        ids
    }

    /// Named sessions, or every stored session when `ids` is absent.
    fn load_many(&self, ids: Option<&str>) -> Result<Vec<Session>, ApiError> {
        match ids {
            Some(list) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|id| self.load(id)).collect(),
            None => Ok(self.session_ids().iter().filter_map(|id| self.load(id).ok()).collect()),
        }
    }
}

/// Receives queued jobs and executes them one at a time.
pub struct Worker {
    state: Arc<AppState>,
    rx: mpsc::Receiver<Job>,
}

impl Worker {
    pub async fn run(mut self) {
        while let Some(job) = self.rx.recv().await {
            self.state.set(&job.id, RunState::Running, None, None);
            let state = self.state.clone();
            let id = job.id.clone();
            let outcome = tokio::task::spawn_blocking(move || execute(&state, &job)).await;
            match outcome {
                Ok(Ok(session_id)) => self.state.set(&id, RunState::Done, Some(session_id), None),
                Ok(Err(e)) => self.state.set(&id, RunState::Failed, None, Some(e.to_string())),
                Err(e) => self.state.set(&id, RunState::Failed, None, Some(e.to_string())),
            }
        }
    }
}

/// Runs a job and stores its session without replacing an existing one.
fn execute(state: &AppState, job: &Job) -> Result<String, CliError> {
    let config = &state.config;
    let scene = load_scene(&job.request.dataset, &config.data)?;
    let mut session = run_request(&job.request, &scene, job.template, &config.bench)?;
    let mut path = session_path(&config.out_dir, &session.name);
    if path.exists() {
        session.name = format!("{}-{}", session.name, job.id);
        path = session_path(&config.out_dir, &session.name);
    }
    export_session(&session, &path)?;
    Ok(path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<CliError> for ApiError {
    fn from(e: CliError) -> Self {
        if e.is_invalid_input() {
            Self::bad_request(e.to_string())
        } else {
            Self::internal(e.to_string())
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message }).to_string();
        (self.status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok_json<T: Serialize>(value: &T) -> Result<Response, ApiError> {
    Ok(json(StatusCode::OK, to_json(value, false)?))
}

type Shared = State<Arc<AppState>>;

async fn catalog() -> Result<Response, ApiError> {
    ok_json(Catalog::builtin())
}

async fn datasets(State(state): Shared) -> Result<Response, ApiError> {
    ok_json(&list_datasets(&state.config.data))
}

#[derive(Serialize)]
struct SessionListing {
    id: String,
    name: String,
    dataset: String,
    template: Option<String>,
    optimizations: Vec<String>,
    sample_count: usize,
    duration: f64,
}

async fn sessions(State(state): Shared) -> Result<Response, ApiError> {
    let listing: Vec<SessionListing> = state
        .session_ids()
        .into_iter()
        .filter_map(|id| match state.load(&id) {
            Ok(s) => Some(SessionListing {
                duration: s.duration(),
                sample_count: s.samples.len(),
                name: s.name,
                dataset: s.dataset,
                template: s.template,
                optimizations: s.optimizations,
                id,
            }),
            Err(e) => {
                log::warn!("skipping session '{id}': {}", e.message);
                None
            }
        })
        .collect();
    ok_json(&listing)
}

async fn session(State(state): Shared, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let path = state.session_file(&id).ok_or_else(|| ApiError::not_found(format!("unknown session '{id}'")))?;
    let text = fs::read_to_string(&path).map_err(|e| ApiError::internal(e.to_string()))?;
    session_from_json(&text).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(json(StatusCode::OK, text))
}

async fn submit_run(State(state): Shared, body: Bytes) -> Result<Response, ApiError> {
    let request: RunRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid run request: {e}")))?;
    let template = precheck(&request, &state.config.data)?;
    let id = format!("run-{}", state.next_run.fetch_add(1, Ordering::SeqCst) + 1);
    state.set(&id, RunState::Queued, None, None);
    if state.queue.try_send(Job { id: id.clone(), request, template }).is_err() {
        state.runs.lock().expect("run table poisoned").remove(&id);
        return Err(ApiError::new(StatusCode::CONFLICT, "run queue is full"));
    }
    let status = RunStatus { id, status: RunState::Queued, session_id: None, error: None };
    Ok(json(StatusCode::ACCEPTED, to_json(&status, false)?))
}

async fn run_status(State(state): Shared, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let status = state.runs.lock().expect("run table poisoned").get(&id).cloned();
    match status {
        Some(s) => ok_json(&s),
        None => Err(ApiError::not_found(format!("unknown run '{id}'"))),
    }
}

#[derive(Deserialize)]
struct CompareQuery {
    a: String,
    b: String,
    metric: Option<String>,
    t0: Option<f64>,
    t1: Option<f64>,
}

async fn analytics_compare(State(state): Shared, Query(q): Query<CompareQuery>) -> Result<Response, ApiError> {
    let metric = q.metric.as_deref().map(parse_metric).transpose()?;
    let w = window(q.t0, q.t1)?;
    let (a, b) = (state.load(&q.a)?, state.load(&q.b)?);
    Ok(json(StatusCode::OK, compare_json(&a, &b, metric, w, false)?))
}

#[derive(Deserialize)]
struct ThresholdQuery {
    metric: String,
    value: f64,
    ids: Option<String>,
}

async fn analytics_threshold(State(state): Shared, Query(q): Query<ThresholdQuery>) -> Result<Response, ApiError> {
    let metric = parse_metric(&q.metric)?;
    let sessions = state.load_many(q.ids.as_deref())?;
    Ok(json(StatusCode::OK, threshold_json(&sessions, metric, q.value, false)?))
}

#[derive(Deserialize)]
struct MultiplesQuery {
    metric: String,
    points: Option<usize>,
    ids: Option<String>,
}

async fn analytics_multiples(State(state): Shared, Query(q): Query<MultiplesQuery>) -> Result<Response, ApiError> {
    let metric = parse_metric(&q.metric)?;
    let sessions = state.load_many(q.ids.as_deref())?;
    Ok(json(StatusCode::OK, multiples_json(&sessions, metric, q.points.unwrap_or(DEFAULT_POINTS), false)?))
}

/// The router and the worker that must be spawned for runs to progress.
pub fn app(config: ServerConfig) -> (Router, Worker) {
    let (tx, rx) = mpsc::channel(config.queue_capacity.max(1));
    let assets = config.assets.clone();
    let state = Arc::new(AppState { config, runs: Mutex::new(BTreeMap::new()), next_run: AtomicU64::new(0), queue: tx });
    let api = Router::new()
        .route("/catalog", get(catalog))
        .route("/datasets", get(datasets))
        .route("/sessions", get(sessions))
        .route("/sessions/{id}", get(session))
        .route("/runs", axum::routing::post(submit_run))
        .route("/runs/{id}", get(run_status))
        .route("/analytics/compare", get(analytics_compare))
        .route("/analytics/threshold", get(analytics_threshold))
        .route("/analytics/multiples", get(analytics_multiples))
        .with_state(state.clone());
    let router = match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    };
    (router, Worker { state, rx })
}

pub async fn serve(config: ServerConfig, port: u16) -> std::io::Result<()> {
    fs::create_dir_all(&config.out_dir)?;
    let (router, worker) = app(config);
    tokio::spawn(worker.run());
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
