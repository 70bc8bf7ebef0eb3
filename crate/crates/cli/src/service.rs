//! JSON-over-HTTP tutoring service.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET  | `/problems` | |
//! | GET  | `/problems/{id}/graph?format=json\|dot` | |
//! | POST | `/sessions` | `{"problemId": "..."}` |
//! | GET  | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/statements` | `{"statement": "..."}` |
//! | GET  | `/sessions/{id}/redaction` | |
//! | GET  | `/sessions/{id}/hint` | |
//! | GET  | `/sessions/{id}/log` | |
//!
//! Errors are `{"code", "message", "detail"}` with a matching status.
//! Problems and graphs are shared read-only; each session sits behind its
//! own mutex so concurrent requests on one session are serialized.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use geotutor::graph::{export_dot, export_json};
use geotutor::tutor::{Event, Session, SessionSnapshot, TutorError, TutorPolicy};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::CommandError;
use crate::config::ServiceConfig;
use crate::library::Library;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: serde_json::Value::Null,
        }
    }

    fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }

    fn unknown_problem(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknownProblem", format!("no problem `{id}`"))
    }

    fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknownSession", format!("no session `{id}`"))
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "badRequest", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "badRequest", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct AppState {
    library: Library,
    policy: TutorPolicy,
    log_dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    /// Writes the session's replay script when a log directory is set.
    /// Failures are logged, never surfaced to the student.
    fn persist(&self, id: &str, session: &Session) {
        let Some(dir) = &self.log_dir else {
            return;
        };
        let path = dir.join(format!("{id}.qs"));
        if let Err(e) = std::fs::write(&path, session.export_script()) {
            log::warn!("cannot write {}: {e}", path.display());
        }
    }
}

fn lock(session: &Mutex<Session>) -> std::sync::MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct FigureObject {
    name: String,
    kind: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ProblemSummary {
    id: String,
    statement: String,
    student_figure: Vec<FigureObject>,
    proof_count: String,
}

async fn list_problems(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let problems: Vec<ProblemSummary> = state
        .library
        .iter()
        .map(|(id, p)| ProblemSummary {
            id: id.to_string(),
            statement: p.problem.statement(),
            student_figure: p
                .problem
                .student_figure
                .iter()
                .map(|o| FigureObject {
                    name: o.name().to_string(),
                    kind: o.kind().to_string(),
                })
                .collect(),
            proof_count: p.forest.total().to_string(),
        })
        .collect();
    Json(json!({ "schemaVersion": SCHEMA_VERSION, "problems": problems }))
}

#[derive(Debug, Deserialize)]
struct GraphQuery {
    format: Option<String>,
}

async fn problem_graph(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<GraphQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(query) = query?;
    let prepared = state.library.get(&id).ok_or_else(|| ApiError::unknown_problem(&id))?;
    match query.format.as_deref().unwrap_or("json") {
        "json" => Ok((
            [(header::CONTENT_TYPE, "application/json")],
            export_json(&prepared.graph),
        )
            .into_response()),
        "dot" => Ok((
            [(header::CONTENT_TYPE, "text/vnd.graphviz")],
            export_dot(&prepared.graph),
        )
            .into_response()),
        other => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "badRequest",
            format!("unknown graph format `{other}` (expected json or dot)"),
        )),
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateSession {
    problem_id: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionState {
    schema_version: u32,
    session_id: String,
    #[serde(flatten)]
    snapshot: SessionSnapshot,
}

fn session_state(id: &str, session: &Session) -> SessionState {
    SessionState {
        schema_version: SCHEMA_VERSION,
        session_id: id.to_string(),
        snapshot: session.snapshot(),
    }
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionState>)> {
    let Json(body) = body?;
    let prepared = state
        .library
        .get(&body.problem_id)
        .ok_or_else(|| ApiError::unknown_problem(&body.problem_id))?;
    let session = Session::new(prepared.clone(), state.policy);
    let id = uuid::Uuid::new_v4().to_string();
    let view = session_state(&id, &session);
    state.persist(&id, &session);
    state
        .sessions
        .write()
        .expect("session table lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionState>> {
    let session = state.session(&id)?;
    let session = lock(&session);
    Ok(Json(session_state(&id, &session)))
}

#[derive(Debug, Deserialize)]
struct SubmitBody {
    statement: String,
}

async fn submit_statement(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SubmitBody>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let Json(body) = body?;
    // Keep the statement on one line so the exported script stays valid.
    let text = body.statement.split_whitespace().collect::<Vec<_>>().join(" ");
    let handle = state.session(&id)?;
    let mut session = lock(&handle);
    let outcome = session.submit_text(&text);
    state.persist(&id, &session);
    match outcome {
        Ok(result) => {
            let best = session.best_proof();
            Ok(Json(json!({
                "result": result.outcome(),
                "completion": best.map_or(0.0, |b| b.completion()),
                "unlocked": session.redaction_view().unlocked,
            })))
        }
        Err(e) => Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformedStatement", e.to_string())
            .with_detail(json!({ "result": "malformed", "statement": text }))),
    }
}

async fn redaction(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let handle = state.session(&id)?;
    let session = lock(&handle);
    let view = session.redaction_view();
    let completion = session.completion();
    // A locked view reveals nothing about the proof's shape.
    let (lines, blanks) = if view.unlocked {
        let blanks = view.blanks();
        (view.lines, Some(blanks))
    } else {
        (Vec::new(), None)
    };
    Ok(Json(json!({
        "unlocked": view.unlocked,
        "completion": completion,
        "blanks": blanks,
        "lines": lines,
    })))
}

async fn hint(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let handle = state.session(&id)?;
    let mut session = lock(&handle);
    let result = session.next_hint();
    state.persist(&id, &session);
    match result {
        Ok(h) => {
            let target = h
                .target
                .map(|t| session.exercise().graph.node(t).label().to_string());
            Ok(Json(json!({ "kind": h.kind, "message": h.message, "target": target })))
        }
        Err(TutorError::NothingMissing) => Ok(Json(json!({
            "kind": "nothingMissing",
            "message": "Your proof is complete.",
            "target": null,
        }))),
        Err(e) => Err(ApiError::new(StatusCode::CONFLICT, "noProof", e.to_string())),
    }
}

async fn session_log(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let handle = state.session(&id)?;
    let session = lock(&handle);
    let events: &[Event] = session.log();
    Ok(Json(json!({
        "schemaVersion": SCHEMA_VERSION,
        "problemId": session.exercise().problem.id,
        "events": events,
        "script": session.export_script(),
    })))
}

/// The service's routes over an already loaded library.
pub fn router(library: Library, policy: TutorPolicy, log_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState {
        library,
        policy,
        log_dir,
        sessions: RwLock::new(HashMap::new()),
    });
    Router::new()
        .route("/problems", get(list_problems))
        .route("/problems/{id}/graph", get(problem_graph))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/statements", post(submit_statement))
        .route("/sessions/{id}/redaction", get(redaction))
        .route("/sessions/{id}/hint", get(hint))
        .route("/sessions/{id}/log", get(session_log))
        .with_state(state)
}

/// Loads the corpus, binds the port and serves until the process stops.
pub async fn serve(cfg: ServiceConfig) -> Result<(), CommandError> {
    let library = Library::load(&cfg.corpus_dir, &cfg.pipeline)?;
    if let Some(dir) = &cfg.log_dir {
        std::fs::create_dir_all(dir).map_err(|source| CommandError::Write {
            path: dir.clone(),
            source,
        })?;
    }
    let app = router(library, cfg.policy, cfg.log_dir.clone());
    let listener = tokio::net::TcpListener::bind((cfg.host.as_str(), cfg.port))
        .await
        .map_err(CommandError::Service)?;
    log::info!("listening on {}:{}", cfg.host, cfg.port);
    axum::serve(listener, app).await.map_err(CommandError::Service)
}
