//! Route table and handlers.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{Html, IntoResponse, Redirect, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use rcses_core::inference::LogEntry;
use rcses_core::model::DEFAULT_PROPERTY;
use rcses_core::{
    render_trace_html, serialize_ontology, serialize_rulebase, EvaluationResult, KbSnapshot,
    Question, SessionState,
};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::ApiError;
use crate::kb::{Document, KbState};
use crate::store::SessionStore;

/// Number of suggested questions returned with every consultation step.
pub const NEXT_QUESTIONS: usize = 5;

#[derive(Debug)]
pub struct AppState {
    pub kb: KbState,
    pub sessions: SessionStore,
    /// Reject requests on sessions pinned to an older snapshot.
    pub strict_kb: bool,
    /// Bearer token for mutating KB endpoints; `None` disables them.
    pub admin_token: Option<String>,
    /// Static client assets served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
}

/// JSON body extractor whose rejections use the API error shape.
#[derive(Debug, FromRequest)]
#[from_request(via(Json), rejection(ApiError))]
pub struct ApiJson<T>(pub T);

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let mut app = Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/models", get(list_models))
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/{id}", get(session_view))
        .route("/api/v1/sessions/{id}/findings", post(assert_finding))
        .route(
            "/api/v1/sessions/{id}/findings/{concept}",
            delete(retract_finding),
        )
        .route("/api/v1/sessions/{id}/results", get(results))
        .route("/api/v1/sessions/{id}/explanation", get(explanation))
        .route("/api/v1/kb/ontology", get(get_ontology).put(put_ontology))
        .route("/api/v1/kb/rules", get(get_rules).put(put_rules))
        .route("/api/v1/kb/lint", post(lint));
    if let Some(dir) = &state.ui_dir {
        app = app
            .nest_service(
                "/ui",
                ServeDir::new(dir).append_index_html_on_directories(true),
            )
            .route("/", get(|| async { Redirect::temporary("/ui/") }));
    }
    app.fallback(not_found)
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_owned();
    let started = Instant::now();
    let response = next.run(req).await;
    tracing::info!(
        target: "rcses_server::request",
        %method,
        %path,
        status = response.status().as_u16(),
        millis = format_args!("{:.3}", started.elapsed().as_secs_f64() * 1000.0),
    );
    response
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    kb_version: u64,
    sessions: usize,
}

async fn health(State(app): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok",
        kb_version: app.kb.current().version(),
        sessions: app.sessions.len(),
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ModelSummary {
    pub model: String,
    pub rule_count: usize,
}

async fn list_models(State(app): State<Arc<AppState>>) -> Json<Vec<ModelSummary>> {
    let kb = app.kb.current();
    Json(
        kb.rulebase()
            .models
            .iter()
            .map(|m| ModelSummary {
                model: m.name.text().to_owned(),
                rule_count: m.rules.len(),
            })
            .collect(),
    )
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    model: String,
}

/// Returned on session creation and after every answer change.
#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Consultation {
    pub evaluation: EvaluationResult,
    pub next_questions: Vec<Question>,
}

impl Consultation {
    pub fn of(session: &SessionState) -> Self {
        Self {
            evaluation: session.evaluate(),
            next_questions: session.next_questions(NEXT_QUESTIONS),
        }
    }
}

#[derive(Debug, Serialize)]
struct SessionCreated {
    session_id: String,
    kb_version: u64,
    model: String,
    #[serde(flatten)]
    consultation: Consultation,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    ApiJson(body): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let session = SessionState::new(app.kb.current(), &body.model)?;
    let created = SessionCreated {
        session_id: session.id().to_owned(),
        kb_version: session.kb_version(),
        model: session.model().name.text().to_owned(),
        consultation: Consultation::of(&session),
    };
    app.sessions.insert(session);
    Ok((StatusCode::CREATED, Json(created)))
}

/// Runs `f` on the live session `id` with the session's lock held.
fn with_session<T>(
    app: &AppState,
    id: &str,
    f: impl FnOnce(&mut SessionState) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    let handle = app
        .sessions
        .get(id)
        .ok_or_else(|| ApiError::session_not_found(id))?;
    let mut session = handle.lock().unwrap_or_else(|e| e.into_inner());
    session.ensure_current(app.kb.current().version(), app.strict_kb)?;
    f(&mut session)
}

#[derive(Debug, Serialize)]
struct Answer {
    concept: String,
    property: String,
    value: String,
}

#[derive(Debug, Serialize)]
struct SessionView {
    session_id: String,
    model: String,
    kb_version: u64,
    answers: Vec<Answer>,
    log: Vec<LogEntry>,
}

async fn session_view(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    with_session(&app, &id, |s| {
        let wm = s.working_memory();
        // Report answers in the order they were first given.
        let mut answers: Vec<Answer> = Vec::new();
        for entry in wm.log() {
            let key = (entry.slot.concept.as_str(), entry.slot.property.as_str());
            if answers
                .iter()
                .any(|a| (a.concept.as_str(), a.property.as_str()) == key)
            {
                continue;
            }
            if let Some(value) = s.answer(key.0, key.1) {
                answers.push(Answer {
                    concept: key.0.to_owned(),
                    property: key.1.to_owned(),
                    value: value.text().to_owned(),
                });
            }
        }
        Ok(Json(SessionView {
            session_id: s.id().to_owned(),
            model: s.model().name.text().to_owned(),
            kb_version: s.kb_version(),
            answers,
            log: wm.log().to_vec(),
        }))
    })
}

fn default_property() -> String {
    DEFAULT_PROPERTY.to_owned()
}

#[derive(Debug, Deserialize)]
struct FindingBody {
    concept: String,
    #[serde(default = "default_property")]
    property: String,
    value: String,
}

async fn assert_finding(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<FindingBody>,
) -> Result<Json<Consultation>, ApiError> {
    with_session(&app, &id, |s| {
        s.assert_finding(&body.concept, &body.property, &body.value)?;
        Ok(Json(Consultation::of(s)))
    })
}

#[derive(Debug, Deserialize)]
struct PropertyQuery {
    property: Option<String>,
}

async fn retract_finding(
    State(app): State<Arc<AppState>>,
    Path((id, concept)): Path<(String, String)>,
    Query(query): Query<PropertyQuery>,
) -> Result<Json<Consultation>, ApiError> {
    let property = query.property.unwrap_or_else(default_property);
    with_session(&app, &id, |s| {
        s.retract_finding(&concept, &property)?;
        Ok(Json(Consultation::of(s)))
    })
}

async fn results(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<EvaluationResult>, ApiError> {
    with_session(&app, &id, |s| Ok(Json(s.evaluate())))
}

#[derive(Debug, Deserialize)]
struct RuleQuery {
    rule: Option<String>,
}

async fn explanation(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<RuleQuery>,
) -> Result<Html<String>, ApiError> {
    let rule = query
        .rule
        .ok_or_else(|| ApiError::bad_request("query parameter `rule` is required"))?;
    with_session(&app, &id, |s| {
        Ok(Html(render_trace_html(&s.explain(&rule)?)))
    })
}

fn etag(kb: &KbSnapshot) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{}\"", kb.fingerprint()))
        .expect("hex fingerprint is a valid header")
}

fn xml_response(kb: &KbSnapshot, bytes: Vec<u8>) -> Response {
    (
        [
            (
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/xml; charset=utf-8"),
            ),
            (header::ETAG, etag(kb)),
        ],
        bytes,
    )
        .into_response()
}

async fn get_ontology(State(app): State<Arc<AppState>>) -> Response {
    let kb = app.kb.current();
    let bytes = serialize_ontology(kb.ontology()).bytes;
    xml_response(&kb, bytes)
}

async fn get_rules(State(app): State<Arc<AppState>>) -> Response {
    let kb = app.kb.current();
    let bytes = serialize_rulebase(kb.rulebase()).bytes;
    xml_response(&kb, bytes)
}

/// Byte comparison whose duration does not depend on where inputs differ.
fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn authorize(app: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let expected = app
        .admin_token
        .as_deref()
        .ok_or_else(ApiError::unauthorized)?;
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(ApiError::unauthorized)?;
    if constant_time_eq(given.trim().as_bytes(), expected.as_bytes()) {
        Ok(())
    } else {
        Err(ApiError::unauthorized())
    }
}

/// The entity tag named by `If-Match`, without quotes or weak prefix.
fn if_match(headers: &HeaderMap) -> Result<Option<String>, ApiError> {
    let Some(raw) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    let raw = raw
        .to_str()
        .map_err(|_| ApiError::bad_request("If-Match is not visible ASCII"))?
        .trim();
    let raw = raw.strip_prefix("W/").unwrap_or(raw);
    Ok(Some(raw.trim_matches('"').to_owned()))
}

async fn put_document(
    app: Arc<AppState>,
    which: Document,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Response, ApiError> {
    authorize(&app, &headers)?;
    let tag = if_match(&headers)?;
    let next = app.kb.replace(which, &body, tag.as_deref()).await?;
    tracing::info!(
        version = next.version(),
        fingerprint = next.fingerprint(),
        "knowledge base replaced"
    );
    Ok((StatusCode::NO_CONTENT, [(header::ETAG, etag(&next))]).into_response())
}

async fn put_ontology(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Response, ApiError> {
    put_document(app, Document::Ontology, headers, body).await
}

async fn put_rules(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> Result<Response, ApiError> {
    put_document(app, Document::Rules, headers, body).await
}

async fn lint(State(app): State<Arc<AppState>>) -> Json<rcses_core::LintReport> {
    Json(app.kb.lint())
}
