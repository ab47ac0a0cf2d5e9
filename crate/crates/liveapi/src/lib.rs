//! Session service for live goal inference over HTTP+JSON.
//!
//! Endpoints:
//!
//! * `POST /sessions` creates a session from a block set.
//! * `POST /sessions/{id}/actions` applies one action and returns the new state.
//! * `GET /sessions/{id}` returns the current state.
//! * `POST /sessions/{id}/undo` rolls back one action by replay.
//! * `GET /sessions/{id}/stream` pushes every new state as a server-sent event.
//!
//! Each session has one writer at a time. Readers load the last published
//! [`SessionView`] without taking the writer lock.

pub mod protocol;
pub mod session;

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use arc_swap::ArcSwap;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use blockwords::inference::{InferenceModel, Method};
use blockwords::lexicon::{CharNGram, Lexicon};
use blockwords::planner::PlannerParams;
use blockwords::proposal::ProposalStrategy;
use blockwords::world::blocks_from_letters;
use blockwords::{BlockId, WorldState};
use futures::stream::{self, Stream, StreamExt};
use rand::Rng;
use tokio::sync::{broadcast, Mutex};

use protocol::{CreateSession, ErrorBody, ErrorResponse, PostAction, SessionSettings, SessionView, PROTOCOL_VERSION};
use session::{SessionCore, SessionError};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_PARTICLES: usize = 20;

/// Service-wide defaults applied to fields a create request leaves out.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceDefaults {
    pub method: Method,
    pub n_particles: usize,
    pub top_k: usize,
    pub planner: PlannerParams,
    pub proposal: ProposalStrategy,
    pub word_temperature: f64,
}

impl Default for ServiceDefaults {
    fn default() -> Self {
        Self {
            method: Method::Sips,
            n_particles: DEFAULT_PARTICLES,
            top_k: DEFAULT_TOP_K,
            planner: PlannerParams::default(),
            proposal: ProposalStrategy::default(),
            word_temperature: blockwords::lexicon::DEFAULT_WORD_TEMPERATURE,
        }
    }
}

/// The word models shared by all sessions.
#[derive(Debug, Clone)]
pub struct Engine {
    pub lexicon: Arc<Lexicon>,
    pub ngram: Arc<CharNGram>,
    pub defaults: ServiceDefaults,
}

struct Session {
    core: Arc<Mutex<SessionCore>>,
    view: ArcSwap<SessionView>,
    updates: broadcast::Sender<Arc<SessionView>>,
}

impl Session {
    fn publish(&self, view: SessionView) -> Arc<SessionView> {
        let view = Arc::new(view);
        self.view.store(view.clone());
        // No subscribers is fine.
        let _ = self.updates.send(view.clone());
        view
    }
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
}

impl AppState {
    pub fn new(engine: Engine) -> Self {
        Self {
            engine: Arc::new(engine),
            sessions: Arc::default(),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table lock").len()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::IllegalAction(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "illegal_action", e.to_string()),
            SessionError::EmptyHistory => Self::new(StatusCode::CONFLICT, "empty_history", e.to_string()),
            SessionError::Inference(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "inference_failed", e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorResponse {
            v: PROTOCOL_VERSION,
            error: ErrorBody {
                code: self.code.to_string(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

fn check_version(v: Option<u32>) -> Result<(), ApiError> {
    match v {
        None | Some(PROTOCOL_VERSION) => Ok(()),
        Some(other) => Err(ApiError::bad_request(format!(
            "unsupported protocol version {other} (server speaks {PROTOCOL_VERSION})"
        ))),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/actions", post(post_action))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/stream", get(stream_session))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, engine: Engine) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(engine))).await
}

fn new_token() -> String {
    format!("{:032x}", rand::rng().random::<u128>())
}

fn initial_state(req: &CreateSession) -> Result<WorldState, ApiError> {
    let n = req.blocks.chars().count();
    if !(1..=26).contains(&n) {
        return Err(ApiError::bad_request(format!("need 1 to 26 blocks, got {n}")));
    }
    let blocks = blocks_from_letters(&req.blocks).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let towers = match &req.towers {
        Some(t) => t.clone(),
        None => (0..n as BlockId)
            .filter(|&b| Some(b) != req.held)
            .map(|b| vec![b])
            .collect(),
    };
    WorldState::new(&blocks, towers, req.held).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn settings(req: &CreateSession, defaults: &ServiceDefaults) -> Result<SessionSettings, ApiError> {
    let planner = PlannerParams {
        beta: req.beta.unwrap_or(defaults.planner.beta),
        budget: req.budget.unwrap_or(defaults.planner.budget),
        cadence: req.cadence.unwrap_or(defaults.planner.cadence),
        strategy: req.search.unwrap_or(defaults.planner.strategy),
    };
    planner.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    let s = SessionSettings {
        method: req.method.unwrap_or(defaults.method),
        n_particles: req.n_particles.unwrap_or(defaults.n_particles),
        seed: req.seed.unwrap_or_else(|| rand::rng().random()),
        top_k: req.top_k.unwrap_or(defaults.top_k),
        beta: planner.beta,
        budget: planner.budget,
        cadence: planner.cadence,
        search: planner.strategy,
        proposal: req.proposal.unwrap_or(defaults.proposal),
    };
    if s.n_particles == 0 {
        return Err(ApiError::bad_request("n_particles must be at least 1"));
    }
    if s.top_k == 0 {
        return Err(ApiError::bad_request("top_k must be at least 1"));
    }
    Ok(s)
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(req) = body?;
    check_version(req.v)?;
    let initial = initial_state(&req)?;
    let settings = settings(&req, &app.engine.defaults)?;
    let engine = app.engine.clone();
    let id = new_token();
    let core_id = id.clone();
    let core = tokio::task::spawn_blocking(move || -> Result<SessionCore, ApiError> {
        let planner = PlannerParams {
            beta: settings.beta,
            budget: settings.budget,
            cadence: settings.cadence,
            strategy: settings.search,
        };
        let model = InferenceModel::new(
            &engine.lexicon,
            engine.ngram.clone(),
            &initial,
            engine.defaults.word_temperature,
            settings.proposal,
            planner,
        )
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(SessionCore::new(core_id, model, initial, settings)?)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let view = Arc::new(core.view());
    let (updates, _) = broadcast::channel(64);
    let session = Arc::new(Session {
        core: Arc::new(Mutex::new(core)),
        view: ArcSwap::new(view.clone()),
        updates,
    });
    app.sessions
        .write()
        .expect("session table lock")
        .insert(id, session);
    Ok((StatusCode::CREATED, Json((*view).clone())))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let session = app.session(&id)?;
    Ok(Json((*session.view.load_full()).clone()))
}

/// Runs `update` on the session core off the async executor while holding
/// the writer lock, then publishes the new view.
async fn mutate(
    session: Arc<Session>,
    update: impl FnOnce(&mut SessionCore) -> Result<(), SessionError> + Send + 'static,
) -> Result<Arc<SessionView>, ApiError> {
    let mut guard = session.core.clone().lock_owned().await;
    let view = tokio::task::spawn_blocking(move || -> Result<SessionView, SessionError> {
        update(&mut guard)?;
        Ok(guard.view())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(session.publish(view))
}

async fn post_action(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PostAction>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let session = app.session(&id)?;
    let Json(req) = body?;
    check_version(req.v)?;
    let view = mutate(session, move |core| core.apply(req.action)).await?;
    Ok(Json((*view).clone()))
}

async fn undo(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let session = app.session(&id)?;
    let view = mutate(session, |core| core.undo()).await?;
    Ok(Json((*view).clone()))
}

fn event(view: &SessionView) -> Result<Event, Infallible> {
    Ok(Event::default()
        .event("state")
        .data(serde_json::to_string(view).expect("views serialize")))
}

async fn stream_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let session = app.session(&id)?;
    let rx = session.updates.subscribe();
    let current = session.view.load_full();
    let first = stream::once(async move { event(&current) });
    let rest = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(view) => return Some((event(&view), rx)),
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(first.chain(rest)).keep_alive(KeepAlive::default()))
}
