//! HTTP session API. GLM-bound requests answer at once with status
//! `querying` and finish in the background unless `?wait=true` is given.
//! Every change bumps the session's revision.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use taskfsa_core::glm::{Backend, PromptTemplates, ReplayBackend, Transcript};
use taskfsa_core::refine::{IterationKind, RefineError, SessionConfig};
use taskfsa_core::stepparse::StepParser;
use taskfsa_core::{parse_ltl, Glm, GlmError, Model, RefinementSession, SessionStatus, StepTree, Verdict};
use tokio::sync::RwLock;

use crate::backend::LiveBackend;
use crate::config::PipelineConfig;
use crate::dot::{controller_dot, model_dot};
use crate::io::write_doc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Idle,
    Querying,
    Verifying,
    Pass,
    Fail,
    Unrepresentable,
}

impl From<SessionStatus> for Status {
    fn from(s: SessionStatus) -> Self {
        match s {
            SessionStatus::Pass => Status::Pass,
            SessionStatus::Fail => Status::Fail,
            SessionStatus::Unrepresentable => Status::Unrepresentable,
        }
    }
}

struct Entry {
    revision: u64,
    status: Status,
    error: Option<String>,
    model: Model,
    session: Option<RefinementSession>,
    /// The client sits out of the entry while a job runs.
    glm: std::sync::Mutex<Option<Glm>>,
}

struct Inner {
    sessions: RwLock<BTreeMap<String, Arc<RwLock<Entry>>>>,
    counter: AtomicU64,
    config: PipelineConfig,
    store: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: PipelineConfig, store: Option<PathBuf>) -> Self {
        AppState { inner: Arc::new(Inner { sessions: RwLock::new(BTreeMap::new()), counter: AtomicU64::new(0), config, store }) }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

fn refine_error(e: &RefineError) -> ApiError {
    match e {
        RefineError::Glm(GlmError::BackendUnavailable { .. }) | RefineError::Glm(GlmError::ReplayMiss { .. }) => {
            ApiError::new(StatusCode::BAD_GATEWAY, e.to_string())
        }
        RefineError::WrongStatus { .. } => ApiError::new(StatusCode::CONFLICT, e.to_string()),
        _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendRequest {
    Replay { transcript: Transcript },
    Live,
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub task: String,
    pub model: Model,
    pub specs: Vec<String>,
    /// Start from these steps instead of querying.
    #[serde(default)]
    pub steps: Option<StepTree>,
    #[serde(default)]
    pub backend: Option<BackendRequest>,
    #[serde(default)]
    pub templates: Option<PromptTemplates>,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct ManualRequest {
    pub instruction: String,
}

#[derive(Debug, Default, Deserialize)]
pub struct WaitParam {
    #[serde(default)]
    pub wait: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerdictView {
    pub spec: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IterationView {
    pub index: usize,
    pub kind: IterationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    pub status: Status,
    pub frontier: Vec<String>,
    pub verdicts: Vec<VerdictView>,
    pub controller_dot: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub revision: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub model_dot: String,
    pub iterations: Vec<IterationView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session: Option<RefinementSession>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub revision: u64,
    pub status: Status,
}

fn verdict_view(v: &Verdict) -> VerdictView {
    VerdictView {
        spec: v.spec.clone(),
        pass: v.pass,
        projection: v.counterexample.as_ref().map(|c| c.projection().to_string()),
        trace: v.counterexample.as_ref().map(|c| c.render()),
    }
}

fn view(id: &str, e: &Entry) -> SessionView {
    let iterations = e
        .session
        .as_ref()
        .map(|s| {
            s.history
                .iter()
                .enumerate()
                .map(|(i, it)| IterationView {
                    index: i + 1,
                    kind: it.kind,
                    instruction: it.instruction.clone(),
                    status: it.status.into(),
                    frontier: it.frontier.clone(),
                    verdicts: it.verdicts.iter().map(verdict_view).collect(),
                    controller_dot: controller_dot(&it.controller),
                })
                .collect()
        })
        .unwrap_or_default();
    SessionView {
        id: id.to_string(),
        revision: e.revision,
        status: e.status,
        error: e.error.clone(),
        model_dot: model_dot(&e.model),
        iterations,
        session: e.session.clone(),
    }
}

enum Job {
    Create { steps: Option<StepTree>, task: String, specs: Vec<String>, config: SessionConfig },
    Manual(String),
    Auto,
    Prune,
}

fn run_job(job: Job, session: Option<RefinementSession>, model: Model, glm: &mut Glm) -> Result<RefinementSession, RefineError> {
    let parser = StepParser::new();
    match job {
        Job::Create { steps: Some(tree), specs, config, .. } => RefinementSession::from_tree(glm, &parser, tree, model, specs, config),
        Job::Create { steps: None, task, specs, config } => RefinementSession::start(glm, &parser, &task, model, specs, config),
        other => {
            let mut s = session.expect("refinement jobs run on existing sessions");
            match other {
                Job::Manual(text) => s.manual_refine(glm, &parser, &text)?,
                Job::Auto => s.auto_refine(glm, &parser)?,
                Job::Prune => s.prune(glm, &parser)?,
                Job::Create { .. } => unreachable!(),
            }
            Ok(s)
        }
    }
}

impl AppState {
    async fn entry(&self, id: &str) -> Result<Arc<RwLock<Entry>>, ApiError> {
        self.inner.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {}", id)))
    }

    fn persist(&self, id: &str, e: &Entry) {
        if let (Some(dir), Some(s)) = (&self.inner.store, &e.session) {
            if let Err(err) = write_doc(&dir.join(format!("{}.json", id)), s) {
                log::error!("saving session {}: {}", id, err);
            }
        }
    }

    fn backend_for(&self, req: Option<BackendRequest>) -> Result<Box<dyn Backend>, ApiError> {
        match req {
            Some(BackendRequest::Replay { transcript }) => Ok(Box::new(ReplayBackend::new(&transcript))),
            Some(BackendRequest::Live) => {
                LiveBackend::from_env().map(|b| Box::new(b) as Box<dyn Backend>).map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()))
            }
            None => self.inner.config.backend().map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.to_string())),
        }
    }

    /// Mark the session busy, run `job` off the async threads and record
    /// the outcome. Returns the final view when `wait` is set.
    async fn launch(&self, id: String, job: Job, wait: bool) -> Result<SessionView, ApiError> {
        let entry = self.entry(&id).await?;
        let (glm, session, model) = {
            let mut e = entry.write().await;
            if e.status == Status::Querying || e.status == Status::Verifying {
                return Err(ApiError::new(StatusCode::CONFLICT, "session is busy"));
            }
            let allowed = match &job {
                Job::Create { .. } => true,
                Job::Manual(_) | Job::Auto => e.status == Status::Fail,
                Job::Prune => e.status == Status::Pass,
            };
            if !allowed {
                return Err(ApiError::new(StatusCode::CONFLICT, format!("not allowed while {:?}", e.status).to_lowercase()));
            }
            let glm = e.glm.get_mut().unwrap().take().expect("idle sessions hold their client");
            e.status = Status::Querying;
            e.error = None;
            e.revision += 1;
            (glm, e.session.clone(), e.model.clone())
        };
        let state = self.clone();
        let task_id = id.clone();
        let handle = tokio::spawn(async move {
            let (glm, result) = tokio::task::spawn_blocking(move || {
                let mut glm = glm;
                let r = run_job(job, session, model, &mut glm);
                (glm, r)
            })
            .await
            .expect("refinement job panicked");
            let entry = state.entry(&task_id).await.expect("sessions are never removed");
            let mut e = entry.write().await;
            *e.glm.get_mut().unwrap() = Some(glm);
            e.revision += 1;
            let outcome = match result {
                Ok(s) => {
                    e.status = s.status().into();
                    e.session = Some(s);
                    state.persist(&task_id, &e);
                    Ok(())
                }
                Err(err) => {
                    e.status = e.session.as_ref().map(|s| s.status().into()).unwrap_or(Status::Idle);
                    e.error = Some(err.to_string());
                    Err(refine_error(&err))
                }
            };
            (view(&task_id, &e), outcome)
        });
        if wait {
            let (v, outcome) = handle.await.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            outcome.map(|_| v)
        } else {
            let e = entry.read().await;
            Ok(view(&id, &e))
        }
    }
}

async fn healthz() -> &'static str {
    "ok"
}

async fn list(State(st): State<AppState>) -> Json<Vec<SessionSummary>> {
    let map = st.inner.sessions.read().await;
    let mut out = Vec::new();
    for (id, e) in map.iter() {
        let e = e.read().await;
        out.push(SessionSummary { id: id.clone(), revision: e.revision, status: e.status });
    }
    Json(out)
}

async fn create(State(st): State<AppState>, Query(q): Query<WaitParam>, Json(req): Json<CreateRequest>) -> Result<Response, ApiError> {
    if req.steps.is_none() && req.task.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "task must not be empty"));
    }
    for (i, s) in req.specs.iter().enumerate() {
        parse_ltl(s).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("spec {}: {}", i, e)))?;
    }
    let report = req.model.validate();
    if !report.ok() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, report.errors.join("; ")));
    }
    let mut config = st.inner.config.session_config();
    if let Some(t) = req.templates {
        config.templates = t;
    }
    if let Some(d) = req.max_depth {
        config.max_depth = d;
    }
    let mut glm = Glm::new(st.backend_for(req.backend)?).with_templates(config.templates.clone());
    glm.params = st.inner.config.params();
    let id = format!("s{}", st.inner.counter.fetch_add(1, Ordering::SeqCst) + 1);
    let entry = Entry { revision: 0, status: Status::Idle, error: None, model: req.model, session: None, glm: std::sync::Mutex::new(Some(glm)) };
    st.inner.sessions.write().await.insert(id.clone(), Arc::new(RwLock::new(entry)));
    let job = Job::Create { steps: req.steps, task: req.task, specs: req.specs, config };
    let v = st.launch(id, job, q.wait).await?;
    let code = if q.wait { StatusCode::CREATED } else { StatusCode::ACCEPTED };
    Ok((code, Json(v)).into_response())
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = st.entry(&id).await?;
    let e = entry.read().await;
    Ok(Json(view(&id, &e)))
}

async fn respond(r: Result<SessionView, ApiError>, wait: bool) -> Result<Response, ApiError> {
    let v = r?;
    let code = if wait { StatusCode::OK } else { StatusCode::ACCEPTED };
    Ok((code, Json(v)).into_response())
}

async fn refine_manual(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<WaitParam>,
    Json(req): Json<ManualRequest>,
) -> Result<Response, ApiError> {
    if req.instruction.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "instruction must not be empty"));
    }
    respond(st.launch(id, Job::Manual(req.instruction), q.wait).await, q.wait).await
}

async fn refine_auto(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<WaitParam>) -> Result<Response, ApiError> {
    respond(st.launch(id, Job::Auto, q.wait).await, q.wait).await
}

async fn prune(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<WaitParam>) -> Result<Response, ApiError> {
    respond(st.launch(id, Job::Prune, q.wait).await, q.wait).await
}

/// `controller` (latest), `model`, or `iteration-N` (1-based).
async fn dot(State(st): State<AppState>, Path((id, artifact)): Path<(String, String)>) -> Result<Response, ApiError> {
    let entry = st.entry(&id).await?;
    let e = entry.read().await;
    let missing = || ApiError::new(StatusCode::NOT_FOUND, format!("no artifact {}", artifact));
    let text = match artifact.as_str() {
        "model" => model_dot(&e.model),
        "controller" => controller_dot(e.session.as_ref().ok_or_else(missing)?.controller()),
        other => {
            let n: usize = other.strip_prefix("iteration-").and_then(|n| n.parse().ok()).ok_or_else(missing)?;
            let s = e.session.as_ref().ok_or_else(missing)?;
            let it = n.checked_sub(1).and_then(|i| s.history.get(i)).ok_or_else(missing)?;
            controller_dot(&it.controller)
        }
    };
    Ok(([(header::CONTENT_TYPE, "text/vnd.graphviz")], text).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/refine-manual", post(refine_manual))
        .route("/sessions/{id}/refine-auto", post(refine_auto))
        .route("/sessions/{id}/prune", post(prune))
        .route("/sessions/{id}/dot/{artifact}", get(dot))
        .with_state(state)
}

pub async fn serve(addr: &str, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
