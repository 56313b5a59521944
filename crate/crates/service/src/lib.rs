//! HTTP grading service.
//!
//! Assignments (rubrics) and graded submissions are kept in memory and
//! persisted to an append-only [`store::RecordStore`]; on start-up the
//! store is replayed. Grading is synchronous: a submission request returns
//! once its record is on disk.

pub mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, Request, State};
use axum::http::{header, HeaderName, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, SecondsFormat, Utc};
use meshgrade::engine::CheckId;
use meshgrade::ingest::ValidationReport;
use meshgrade::rubric::{parse_rubric, ConfigError, Rubric};
use meshgrade::similarity::{cluster_fingerprints, digests_of, scene_fingerprints, Fingerprint};
use meshgrade::summary::{check_failure_counts, score_histogram, HISTOGRAM_BINS};
use meshgrade::{grade, render_feedback, FeedbackTemplateSet, GradeReport, SubmissionFormat};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use store::{RecordStore, StoreError};

pub const DEFAULT_BODY_LIMIT: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub store_path: PathBuf,
    pub body_limit: usize,
    /// Optional shared-secret header (name, value) required on every route
    /// except the health check.
    pub secret: Option<(HeaderName, String)>,
    pub templates: FeedbackTemplateSet,
}

impl ServiceConfig {
    pub fn new(bind: SocketAddr, store_path: impl Into<PathBuf>) -> Self {
        Self {
            bind,
            store_path: store_path.into(),
            body_limit: DEFAULT_BODY_LIMIT,
            secret: None,
            templates: FeedbackTemplateSet::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub assignment_id: String,
    pub created_at: DateTime<Utc>,
    /// The rubric document as submitted.
    pub rubric: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub submission_id: String,
    pub assignment_id: String,
    pub received_at: DateTime<Utc>,
    /// SHA-256 of the submitted bytes.
    pub scene_digest: String,
    /// The report exactly as it is served.
    pub report: Box<RawValue>,
    pub fingerprints: Vec<Fingerprint>,
}

/// One line of the record store.
#[derive(Debug, Serialize, Deserialize)]
enum Entry {
    Assignment(AssignmentRecord),
    Submission(SubmissionRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentStats {
    pub assignment_id: String,
    pub submission_count: u64,
    pub mean_score: f64,
    pub score_histogram: [u64; HISTOGRAM_BINS],
    pub per_check_failure_counts: BTreeMap<CheckId, u64>,
    pub duplicate_cluster_count: u64,
}

struct Assignment {
    rubric: Arc<Rubric>,
    rubric_digests: BTreeSet<String>,
    submissions: Vec<String>,
}

struct Submission {
    record: Arc<SubmissionRecord>,
    report: Arc<GradeReport>,
}

#[derive(Default)]
struct Registry {
    assignments: HashMap<String, Assignment>,
    submissions: HashMap<String, Submission>,
}

impl Registry {
    fn add_assignment(&mut self, id: String, rubric: Rubric) {
        let rubric_digests = digests_of(&rubric.scene);
        self.assignments.insert(
            id,
            Assignment {
                rubric: Arc::new(rubric),
                rubric_digests,
                submissions: Vec::new(),
            },
        );
    }

    fn add_submission(&mut self, record: SubmissionRecord, report: GradeReport) {
        if let Some(a) = self.assignments.get_mut(&record.assignment_id) {
            a.submissions.push(record.submission_id.clone());
        }
        self.submissions.insert(
            record.submission_id.clone(),
            Submission {
                record: Arc::new(record),
                report: Arc::new(report),
            },
        );
    }
}

pub struct AppState {
    registry: RwLock<Registry>,
    store: Mutex<RecordStore>,
    templates: FeedbackTemplateSet,
    secret: Option<(HeaderName, String)>,
    body_limit: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("record store holds an invalid rubric for assignment {id}: {source}")]
    Replay {
        id: String,
        #[source]
        source: ConfigError,
    },
    #[error("record store holds an unreadable report for submission {id}: {source}")]
    ReplayReport {
        id: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

impl AppState {
    /// Opens the record store and rebuilds the in-memory registry from it.
    pub fn open(config: &ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let (store, entries) = RecordStore::open::<Entry>(&config.store_path)?;
        let mut registry = Registry::default();
        for entry in entries {
            match entry {
                Entry::Assignment(a) => {
                    let bytes = serde_json::to_vec(&a.rubric).expect("values serialize");
                    let rubric = parse_rubric(&bytes, None, &a.assignment_id).map_err(|source| ServiceError::Replay {
                        id: a.assignment_id.clone(),
                        source,
                    })?;
                    registry.add_assignment(a.assignment_id, rubric);
                }
                Entry::Submission(s) => {
                    let report: GradeReport =
                        serde_json::from_str(s.report.get()).map_err(|source| ServiceError::ReplayReport {
                            id: s.submission_id.clone(),
                            source,
                        })?;
                    registry.add_submission(s, report);
                }
            }
        }
        Ok(Arc::new(Self {
            registry: RwLock::new(registry),
            store: Mutex::new(store),
            templates: config.templates.clone(),
            secret: config.secret.clone(),
            body_limit: config.body_limit,
        }))
    }

    pub fn submission_count(&self) -> usize {
        self.registry.read().expect("registry lock").submissions.len()
    }

    fn append(&self, entry: &Entry) -> Result<(), ApiError> {
        self.store
            .lock()
            .expect("store lock")
            .append(entry)
            .map_err(|e| ApiError::internal(e.to_string()))
    }

    fn create_assignment(&self, body: &[u8]) -> Result<Value, ApiError> {
        let rubric_doc: Value = serde_json::from_slice(body).map_err(|e| {
            let mut report = ValidationReport::default();
            report.error(format!("line {}, column {}", e.line(), e.column()), format!("malformed JSON: {e}"));
            ApiError::validation(StatusCode::BAD_REQUEST, report)
        })?;
        let assignment_id = new_id();
        let rubric = parse_rubric(body, None, &assignment_id).map_err(config_error)?;
        let response = json!({
            "assignment_id": assignment_id,
            "rubric_id": rubric.id,
            "warnings": rubric.warnings,
        });
        let record = AssignmentRecord {
            assignment_id: assignment_id.clone(),
            created_at: now(),
            rubric: rubric_doc,
        };
        // hold the registry lock across the append so a reader never sees
        // an assignment that is not yet durable
        let mut registry = self.registry.write().expect("registry lock");
        self.append(&Entry::Assignment(record))?;
        registry.add_assignment(assignment_id, rubric);
        Ok(response)
    }

    fn submit(&self, assignment_id: &str, format: SubmissionFormat, body: &[u8]) -> Result<String, ApiError> {
        let rubric = {
            let registry = self.registry.read().expect("registry lock");
            let a = registry
                .assignments
                .get(assignment_id)
                .ok_or_else(|| ApiError::not_found(format!("unknown assignment {assignment_id}")))?;
            Arc::clone(&a.rubric)
        };
        let parsed = format
            .parse(body)
            .map_err(|report| ApiError::validation(StatusCode::BAD_REQUEST, report))?;
        let submission_id = new_id();
        let mut report = grade(&submission_id, &parsed.scene, &rubric).map_err(config_error)?;
        report.feedback = Some(render_feedback(&report, &self.templates));
        let report_text = report.to_json();
        let record = SubmissionRecord {
            submission_id: submission_id.clone(),
            assignment_id: assignment_id.to_owned(),
            received_at: now(),
            scene_digest: hex::encode(Sha256::digest(body)),
            report: RawValue::from_string(report_text).expect("report is JSON"),
            fingerprints: scene_fingerprints(&parsed.scene),
        };
        let entry = Entry::Submission(record);
        let mut registry = self.registry.write().expect("registry lock");
        self.append(&entry)?;
        let Entry::Submission(record) = entry else { unreachable!() };
        let body = serde_json::to_string_pretty(&record).expect("records serialize");
        registry.add_submission(record, report);
        Ok(body)
    }

    fn report(&self, submission_id: &str) -> Result<String, ApiError> {
        let registry = self.registry.read().expect("registry lock");
        registry
            .submissions
            .get(submission_id)
            // the stored JSON value plus the newline every report document ends with
            .map(|s| format!("{}\n", s.record.report.get()))
            .ok_or_else(|| ApiError::not_found(format!("unknown submission {submission_id}")))
    }

    /// Pure fold over the assignment's records as of the call.
    pub fn stats(&self, assignment_id: &str) -> Option<AssignmentStats> {
        let (max_score, exclude, subs) = {
            let registry = self.registry.read().expect("registry lock");
            let a = registry.assignments.get(assignment_id)?;
            let subs: Vec<(Arc<SubmissionRecord>, Arc<GradeReport>)> = a
                .submissions
                .iter()
                .filter_map(|id| registry.submissions.get(id))
                .map(|s| (Arc::clone(&s.record), Arc::clone(&s.report)))
                .collect();
            (a.rubric.weights.max_score, a.rubric_digests.clone(), subs)
        };
        let n = subs.len() as u64;
        let mean_score = if n == 0 {
            0.0
        } else {
            subs.iter().map(|(_, r)| r.score).sum::<f64>() / n as f64
        };
        let duplicates = cluster_fingerprints(
            subs.iter()
                .flat_map(|(rec, _)| rec.fingerprints.iter().map(move |f| (rec.submission_id.as_str(), f))),
            &exclude,
        );
        Some(AssignmentStats {
            assignment_id: assignment_id.to_owned(),
            submission_count: n,
            mean_score,
            score_histogram: score_histogram(subs.iter().map(|(_, r)| r.score), max_score),
            per_check_failure_counts: check_failure_counts(subs.iter().map(|(_, r)| r.as_ref())),
            duplicate_cluster_count: duplicates.clusters.len() as u64,
        })
    }
}

fn new_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

fn now() -> DateTime<Utc> {
    // whole microseconds so the stored text round-trips exactly
    let t = Utc::now();
    DateTime::parse_from_rfc3339(&t.to_rfc3339_opts(SecondsFormat::Micros, true))
        .expect("valid timestamp")
        .with_timezone(&Utc)
}

fn config_error(e: ConfigError) -> ApiError {
    let report = match e {
        ConfigError::RubricScene(report) => report,
        other => {
            let mut report = ValidationReport::default();
            report.error("", other.to_string());
            report
        }
    };
    ApiError::validation(StatusCode::BAD_REQUEST, report)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn validation(status: StatusCode, report: ValidationReport) -> Self {
        Self {
            status,
            body: serde_json::to_value(report).expect("reports serialize"),
        }
    }

    fn not_found(message: String) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            body: json!({ "error": message }),
        }
    }

    fn internal(message: String) -> Self {
        tracing::error!(%message, "request failed");
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "error": message }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn json_text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn create_assignment(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let value = blocking(move || state.create_assignment(&body)).await?;
    Ok((StatusCode::CREATED, Json(value)).into_response())
}

#[derive(Debug, Deserialize)]
struct SubmitQuery {
    format: Option<String>,
}

async fn submit(
    State(state): State<Arc<AppState>>,
    Path(assignment_id): Path<String>,
    Query(query): Query<SubmitQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let format = match query.format.as_deref() {
        None | Some("sgf") => SubmissionFormat::Sgf,
        Some("obj") => SubmissionFormat::Obj,
        Some(other) => {
            let mut report = ValidationReport::default();
            report.error("format", format!("unsupported format '{other}' (expected sgf or obj)"));
            return Err(ApiError::validation(StatusCode::BAD_REQUEST, report));
        }
    };
    let text = blocking(move || state.submit(&assignment_id, format, &body)).await?;
    Ok(json_text(StatusCode::CREATED, text))
}

async fn get_report(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(json_text(StatusCode::OK, state.report(&id)?))
}

async fn get_stats(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let stats = blocking(move || {
        state
            .stats(&id)
            .ok_or_else(|| ApiError::not_found(format!("unknown assignment {id}")))
    })
    .await?;
    Ok(Json(stats).into_response())
}

async fn healthz() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn require_secret(State(state): State<Arc<AppState>>, request: Request, next: Next) -> Response {
    if let Some((name, value)) = &state.secret {
        let ok = request
            .headers()
            .get(name)
            .is_some_and(|v| v.as_bytes() == value.as_bytes());
        if !ok {
            return (StatusCode::UNAUTHORIZED, Json(json!({ "error": "missing or wrong shared secret" })))
                .into_response();
        }
    }
    next.run(request).await
}

pub fn router(state: Arc<AppState>) -> Router {
    let guarded = Router::new()
        .route("/v1/assignments", post(create_assignment))
        .route("/v1/assignments/{id}/submissions", post(submit))
        .route("/v1/submissions/{id}/report", get(get_report))
        .route("/v1/assignments/{id}/stats", get(get_stats))
        .route_layer(middleware::from_fn_with_state(Arc::clone(&state), require_secret));
    Router::new()
        .merge(guarded)
        .route("/v1/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(state.body_limit))
        .with_state(state)
}

/// Binds and serves until the process is stopped. `on_bound` receives the
/// actual address (useful with port 0).
pub async fn serve(config: ServiceConfig, on_bound: impl FnOnce(SocketAddr)) -> Result<(), ServiceError> {
    let state = AppState::open(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.bind,
            source,
        })?;
    let addr = listener.local_addr().map_err(ServiceError::Serve)?;
    on_bound(addr);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
