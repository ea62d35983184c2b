//! HTTP API for the game solvers, the reputation optimizer, scenario runs and
//! interactive decision sessions.
//!
//! Solver endpoints are pure. Sessions sit in an in-memory map, each behind
//! its own mutex so concurrent decisions on one session serialize while
//! different sessions proceed independently.

pub mod api;
pub mod error;
mod openapi;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;
use session::SessionState;

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("persistence file {path}: {reason}")]
    Persist { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    /// Sessions created without a seed derive one from this and a counter.
    pub seed: u64,
    pub persist: Option<PathBuf>,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
}

type Shared<T> = Arc<Mutex<T>>;

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Shared<SessionState>>>,
    counter: AtomicU64,
    seed: u64,
    artifacts: RwLock<api::Artifacts>,
}

/// On-disk form of the session store.
#[derive(Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub counter: u64,
    pub sessions: Vec<SessionState>,
}

impl AppState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn from_snapshot(seed: u64, snap: Snapshot) -> Self {
        let sessions = snap
            .sessions
            .into_iter()
            .map(|s| (s.id.clone(), Arc::new(Mutex::new(s))))
            .collect();
        Self {
            sessions: RwLock::new(sessions),
            counter: AtomicU64::new(snap.counter),
            seed,
            artifacts: RwLock::default(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let map = self.sessions.read().expect("session map poisoned");
        let mut sessions: Vec<SessionState> = map
            .values()
            .map(|s| s.lock().expect("session poisoned").clone())
            .collect();
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        Snapshot {
            counter: self.counter.load(Ordering::SeqCst),
            sessions,
        }
    }

    fn session(&self, id: &str) -> Result<Shared<SessionState>, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    /// Seed for the k-th session: a stream of the server seed.
    fn derived_seed(&self, k: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng.next_u64()
    }
}

pub fn load_snapshot(path: &FsPath) -> Result<Option<Snapshot>, ServerError> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| ServerError::Persist {
                path: path.to_path_buf(),
                reason: e.to_string(),
            }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn save_snapshot(state: &AppState, path: &FsPath) -> Result<(), ServerError> {
    let json = serde_json::to_vec_pretty(&state.snapshot()).expect("snapshot serializes");
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, json)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: Serialize>(status: StatusCode, body: &T) -> ApiResult {
    Ok((status, Json(body)).into_response())
}

/// Runs a CPU-bound handler off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn solve(body: Bytes) -> ApiResult {
    ok(StatusCode::OK, &blocking(move || api::solve(&body)).await?)
}

async fn optimize(body: Bytes) -> ApiResult {
    ok(StatusCode::OK, &blocking(move || api::optimize(&body)).await?)
}

async fn simulate(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let (resp, files) = blocking(move || api::simulate(&body)).await?;
    app.artifacts.write().expect("artifact map poisoned").extend(files);
    ok(StatusCode::OK, &resp)
}

async fn sweep(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let (resp, files) = blocking(move || api::sweep(&body)).await?;
    app.artifacts.write().expect("artifact map poisoned").extend(files);
    ok(StatusCode::OK, &resp)
}

async fn artifact(State(app): State<Arc<AppState>>, Path((id, name)): Path<(String, String)>) -> ApiResult {
    let store = app.artifacts.read().expect("artifact map poisoned");
    let body = store.get(&format!("{id}/{name}")).ok_or(ApiError::NotFound)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body.clone()).into_response())
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: api::CreateSession = error::parse_json(&body)?;
    let inst = api::build_instance(&req.instance)?;
    let rep = req.reputation.resolve(&inst)?;
    let k = app.counter.fetch_add(1, Ordering::SeqCst) + 1;
    let id = format!("s{k:06}");
    let seed = req.seed.unwrap_or_else(|| app.derived_seed(k));
    let s = SessionState::new(id.clone(), inst, rep, seed)?;
    let view = s.view()?;
    app.sessions
        .write()
        .expect("session map poisoned")
        .insert(id, Arc::new(Mutex::new(s)));
    tracing::info!(session = %view.state.id, "session created");
    ok(StatusCode::CREATED, &view)
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = app.session(&id)?;
    let view = s.lock().expect("session poisoned").view()?;
    ok(StatusCode::OK, &view)
}

async fn decide(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = app.session(&id)?;
    let req: api::DecisionRequest = error::parse_json(&body)?;
    let mut guard = s.lock().expect("session poisoned");
    guard.decide(req.action)?;
    ok(StatusCode::OK, &guard.view()?)
}

async fn what_if(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = app.session(&id)?;
    let req: api::WhatIfRequest = error::parse_json(&body)?;
    let guard = s.lock().expect("session poisoned");
    let rep = req.reputation.resolve(&guard.instance)?;
    ok(StatusCode::OK, &guard.what_if(&rep)?)
}

async fn spec() -> Json<serde_json::Value> {
    Json(openapi::document())
}

async fn not_found() -> ApiError {
    ApiError::NotFound
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, ServerError> {
    let origin = match cors_origin {
        None => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|_| ServerError::CorsOrigin(o.into()))?),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Ok(Router::new()
        .route("/v1/solve", post(solve))
        .route("/v1/optimize", post(optimize))
        .route("/v1/simulate", post(simulate))
        .route("/v1/sweep", post(sweep))
        .route("/v1/artifacts/{id}/{name}", get(artifact))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/decision", post(decide))
        .route("/v1/sessions/{id}/whatif", post(what_if))
        .route("/v1/spec", get(spec))
        .fallback(not_found)
        .layer(cors)
        .with_state(state))
}

/// Serves until Ctrl-C, then writes the session store if `persist` is set.
pub async fn serve(cfg: ServerConfig) -> Result<(), ServerError> {
    let state = match &cfg.persist {
        Some(path) => match load_snapshot(path)? {
            Some(snap) => {
                tracing::info!(sessions = snap.sessions.len(), path = %path.display(), "restored sessions");
                AppState::from_snapshot(cfg.seed, snap)
            }
            None => AppState::new(cfg.seed),
        },
        None => AppState::new(cfg.seed),
    };
    let state = Arc::new(state);
    let app = router(state.clone(), cfg.cors_origin.as_deref())?;
    let listener = tokio::net::TcpListener::bind(cfg.bind)
        .await
        .map_err(|source| ServerError::Bind { addr: cfg.bind, source })?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = &cfg.persist {
        save_snapshot(&state, path)?;
        tracing::info!(path = %path.display(), "sessions saved");
    }
    Ok(())
}
