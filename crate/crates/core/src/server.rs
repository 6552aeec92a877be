//! HTTP service: multi-session lifecycle, uploads and scoped analytics
//! queries.
//!
//! Every GET is a pure function of the session version and the request URI,
//! so responses are memoized on `(session, version, uri)`. Mutations are
//! serialized per session and never block concurrent reads, which always see
//! an immutable snapshot.

use std::collections::{BTreeMap, HashMap};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::TcpListener;

use crate::aoi::{self, AoiError, ContextClass, LabeledFixation};
use crate::bundle::{self, BundleError};
use crate::fixation::DetectionParams;
use crate::ingest::{self, HeaderMode, IngestError, IngestOptions};
use crate::matrix::{self, MatrixError};
use crate::metrics::{self, PctDenominator};
use crate::model::{Dimension, EntityDim, Fixation, Gid, Saccade, Scope, Shape};
use crate::seriation::{self, Axis, Direction, Reordering, SeriationError};
use crate::session::{time_fraction_filter, Note, ScopedView, Session, SessionError};
use crate::similarity::NwScoring;
use crate::spatial::{self, BundleParams, Bounds, KdeParams, Kernel, Segment, SpatialError, Weighting};

pub const PORT_ENV: &str = "GAZESCOPE_PORT";
pub const DATA_DIR_ENV: &str = "GAZESCOPE_DATA_DIR";
pub const DEFAULT_PORT: u16 = 7878;

const CACHE_LIMIT: usize = 1024;
const BODY_LIMIT: usize = 512 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("data directory {path} is not writable: {reason}")]
    DataDirUnwritable { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An error response: `{"error": <kind>, "message": <text>}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl ToString) -> Self {
        Self {
            status,
            kind,
            message: message.to_string(),
        }
    }

    fn bad(kind: &'static str, message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, kind, message)
    }

    fn not_found(message: impl ToString) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.kind, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let kind = match &e {
            SessionError::UnknownScopeTarget(_) => "unknown_scope_target",
            SessionError::UnknownId { .. } => "unknown_id",
            SessionError::DegenerateShape(_) => "degenerate_shape",
            SessionError::Invalid(_) => "invalid_dataset",
            SessionError::Detection(_) | SessionError::InvalidParam(_) => "invalid_params",
        };
        Self::bad(kind, e)
    }
}

impl From<MatrixError> for ApiError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::UnsupportedCombination { .. } => Self::bad("unsupported_combination", e),
            MatrixError::Session(s) => s.into(),
            e => Self::bad("matrix", e),
        }
    }
}

macro_rules! bad_request_from {
    ($($t:ty => $kind:literal),* $(,)?) => {
        $(impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                Self::bad($kind, e)
            }
        })*
    };
}

bad_request_from!(
    IngestError => "ingest",
    BundleError => "bundle",
    AoiError => "aoi",
    SpatialError => "spatial",
    SeriationError => "seriation",
);

type ApiResult<T> = Result<T, ApiError>;

struct SessionSlot {
    current: RwLock<Arc<Session>>,
    writer: tokio::sync::Mutex<()>,
}

impl SessionSlot {
    fn new(s: Session) -> Self {
        Self {
            current: RwLock::new(Arc::new(s)),
            writer: tokio::sync::Mutex::new(()),
        }
    }

    fn snapshot(&self) -> Arc<Session> {
        self.current.read().expect("session lock").clone()
    }
}

#[derive(Default)]
struct Inner {
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    cache: Mutex<HashMap<(String, u64, String), (&'static str, Bytes)>>,
    data_dir: Option<PathBuf>,
    ui_dir: Option<PathBuf>,
}

/// Shared server state; cheap to clone.
#[derive(Clone, Default)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(data_dir: Option<PathBuf>, ui_dir: Option<PathBuf>) -> Self {
        Self(Arc::new(Inner {
            data_dir,
            ui_dir,
            ..Inner::default()
        }))
    }

    fn slot(&self, id: &str) -> ApiResult<Arc<SessionSlot>> {
        self.0
            .sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }

    fn insert(&self, s: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.0
            .sessions
            .write()
            .expect("sessions lock")
            .insert(id.clone(), Arc::new(SessionSlot::new(s)));
        id
    }

    /// Applies an edit under the session's writer lock.
    async fn mutate<F>(&self, id: &str, edit: F) -> ApiResult<Json<Mutated>>
    where
        F: FnOnce(&Session) -> ApiResult<Session>,
    {
        let slot = self.slot(id)?;
        let _guard = slot.writer.lock().await;
        let next = edit(&slot.snapshot())?;
        let version = next.version();
        *slot.current.write().expect("session lock") = Arc::new(next);
        Ok(Json(Mutated {
            session_id: id.to_string(),
            version,
        }))
    }

    /// Serves a GET from the memo table, computing it off the async runtime on a miss.
    async fn cached<F>(&self, id: &str, uri: &Uri, compute: F) -> ApiResult<Response>
    where
        F: FnOnce(&Session) -> ApiResult<(&'static str, Vec<u8>)> + Send + 'static,
    {
        let session = self.slot(id)?.snapshot();
        let key = (id.to_string(), session.version(), uri.to_string());
        let hit = self.0.cache.lock().expect("cache lock").get(&key).cloned();
        let (content_type, body) = match hit {
            Some(v) => v,
            None => {
                let (ct, bytes) = tokio::task::spawn_blocking(move || compute(&session))
                    .await
                    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))??;
                let body = Bytes::from(bytes);
                let mut cache = self.0.cache.lock().expect("cache lock");
                if cache.len() >= CACHE_LIMIT {
                    cache.clear();
                }
                cache.insert(key.clone(), (ct, body.clone()));
                (ct, body)
            }
        };
        Ok((
            [
                (header::CONTENT_TYPE, content_type.to_string()),
                (header::HeaderName::from_static("x-session-version"), key.1.to_string()),
            ],
            body,
        )
            .into_response())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Mutated {
    pub session_id: String,
    pub version: u64,
}

const JSON: &str = "application/json";

fn json<T: Serialize>(v: &T) -> ApiResult<(&'static str, Vec<u8>)> {
    serde_json::to_vec(v)
        .map(|b| (JSON, b))
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))
}

/// All routes under `/api`, plus static UI assets when a UI directory is set.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/import", post(import_new))
        .route("/api/sessions/{id}", get(session_summary).delete(delete_session))
        .route("/api/sessions/{id}/samples", post(upload_samples))
        .route("/api/sessions/{id}/samples/{sample}", axum::routing::delete(delete_sample))
        .route("/api/sessions/{id}/aois", put(put_aois))
        .route("/api/sessions/{id}/aois/{aoi}/shape", put(put_aoi_shape))
        .route("/api/sessions/{id}/twis", put(put_twis))
        .route("/api/sessions/{id}/groups", put(put_groups))
        .route("/api/sessions/{id}/groups/{dimension}", put(put_group_assignments))
        .route("/api/sessions/{id}/params", put(put_params))
        .route("/api/sessions/{id}/scope", put(put_scope))
        .route("/api/sessions/{id}/orderings/{matrix_id}", put(put_ordering))
        .route("/api/sessions/{id}/notes", get(get_notes))
        .route("/api/sessions/{id}/notes/{sample}", put(put_notes))
        .route("/api/sessions/{id}/fixations", get(get_fixations))
        .route("/api/sessions/{id}/saccades", get(get_saccades))
        .route("/api/sessions/{id}/labels", get(get_labels))
        .route("/api/sessions/{id}/metrics", get(get_metrics))
        .route("/api/sessions/{id}/matrix", get(get_matrix))
        .route("/api/sessions/{id}/histogram", get(get_histogram))
        .route("/api/sessions/{id}/density", get(get_density))
        .route("/api/sessions/{id}/bundles", get(get_bundles))
        .route("/api/sessions/{id}/timeline", get(get_timeline))
        .route("/api/sessions/{id}/focus-context", get(get_focus_context))
        .route("/api/sessions/{id}/export", get(get_export))
        .route("/api/sessions/{id}/import", post(import_into))
        .route("/api/sessions/{id}/save", post(save_bundle))
        .fallback(static_asset)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Creates (if needed) and probes the data directory.
pub fn check_data_dir(dir: &Path) -> Result<(), ServerError> {
    let fail = |e: std::io::Error| ServerError::DataDirUnwritable {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(format!(".probe-{}", std::process::id()));
    std::fs::write(&probe, b"").map_err(fail)?;
    std::fs::remove_file(&probe).map_err(fail)
}

/// Binds the listener; port 0 picks an ephemeral port.
pub async fn bind(port: u16) -> Result<TcpListener, ServerError> {
    TcpListener::bind(SocketAddr::from((Ipv4Addr::LOCALHOST, port)))
        .await
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::AddrInUse => ServerError::PortInUse(port),
            _ => ServerError::Io(e),
        })
}

/// Serves until the process is stopped.
pub async fn serve(listener: TcpListener, state: AppState) -> Result<(), ServerError> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

async fn create_session(State(st): State<AppState>) -> Json<Mutated> {
    let id = st.insert(Session::default());
    Json(Mutated {
        session_id: id,
        version: 0,
    })
}

async fn list_sessions(State(st): State<AppState>) -> Json<serde_json::Value> {
    let mut ids: Vec<String> = st.0.sessions.read().expect("sessions lock").keys().cloned().collect();
    ids.sort();
    Json(serde_json::json!({ "sessions": ids }))
}

async fn delete_session(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<StatusCode> {
    st.0.sessions
        .write()
        .expect("sessions lock")
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    id: &'a str,
    label: &'a str,
    gid: Gid,
    points: usize,
    fixations: usize,
}

#[derive(Serialize)]
struct SessionSummary<'a> {
    session_id: &'a str,
    version: u64,
    detection: DetectionParams,
    params: &'a crate::session::AnalysisParams,
    scope: String,
    time_fraction: f64,
    samples: Vec<SampleSummary<'a>>,
    aois: &'a [crate::model::Aoi],
    twis: &'a [crate::model::Twi],
    groups: crate::model::GroupTable,
    orderings: &'a BTreeMap<String, Reordering>,
}

async fn session_summary(State(st): State<AppState>, UrlPath(id): UrlPath<String>, uri: Uri) -> ApiResult<Response> {
    let sid = id.clone();
    st.cached(&id, &uri, move |s| {
        let ds = s.dataset();
        json(&SessionSummary {
            session_id: &sid,
            version: s.version(),
            detection: s.detection(),
            params: s.params(),
            scope: s.scope().to_string(),
            time_fraction: s.time_fraction(),
            samples: ds
                .samples
                .iter()
                .map(|x| SampleSummary {
                    id: &x.id,
                    label: &x.label,
                    gid: x.group_id,
                    points: x.points.len(),
                    fixations: s.fixations(&x.id).map_or(0, |f| f.len()),
                })
                .collect(),
            aois: &ds.aois,
            twis: &ds.twis,
            groups: ds.group_table(),
            orderings: s.orderings(),
        })
    })
    .await
}

#[derive(Deserialize, Default)]
struct UploadQuery {
    /// Sample id for a single uploaded file (defaults to the file stem).
    id: Option<String>,
    #[serde(default)]
    twi_column: bool,
    header: Option<String>,
}

fn file_stem(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string())
}

async fn upload_samples(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<UploadQuery>,
    mut form: Multipart,
) -> ApiResult<Json<Mutated>> {
    let has_header = match q.header.as_deref() {
        None | Some("auto") => HeaderMode::Auto,
        Some("yes" | "true") => HeaderMode::Yes,
        Some("no" | "false") => HeaderMode::No,
        Some(other) => return Err(ApiError::bad("invalid_params", format!("header must be auto, yes or no, got `{other}`"))),
    };
    let opts = IngestOptions {
        has_header,
        twi_column: q.twi_column,
    };
    let mut files = Vec::new();
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad("multipart", e))?
    {
        let name = field
            .file_name()
            .map(file_stem)
            .or_else(|| field.name().map(str::to_string))
            .unwrap_or_default();
        let bytes = field.bytes().await.map_err(|e| ApiError::bad("multipart", e))?;
        files.push((name, bytes));
    }
    if files.is_empty() {
        return Err(ApiError::bad("multipart", "no files in upload"));
    }
    if let Some(sid) = &q.id {
        if files.len() != 1 {
            return Err(ApiError::bad("multipart", "`id` applies to single-file uploads only"));
        }
        files[0].0 = sid.clone();
    }
    let mut parsed = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        if name.is_empty() {
            return Err(ApiError::bad("multipart", "cannot derive a sample id for an unnamed part"));
        }
        parsed.push(ingest::parse_gaze_tsv(&bytes, &name, opts)?);
    }
    st.mutate(&id, move |s| {
        let mut next = s.clone();
        for (sample, twis) in parsed {
            next = next.upsert_sample(sample, twis)?;
        }
        Ok(next)
    })
    .await
}

async fn delete_sample(
    State(st): State<AppState>,
    UrlPath((id, sample)): UrlPath<(String, String)>,
) -> ApiResult<Json<Mutated>> {
    st.mutate(&id, |s| Ok(s.remove_sample(&sample)?)).await
}

async fn put_aois(State(st): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<Mutated>> {
    let aois = aoi::parse_aois_json(&body)?;
    st.mutate(&id, |s| Ok(s.set_aois(aois)?)).await
}

async fn put_aoi_shape(
    State(st): State<AppState>,
    UrlPath((id, aoi_id)): UrlPath<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Mutated>> {
    let shape: Shape = serde_json::from_slice(&body).map_err(|e| ApiError::bad("json", e))?;
    st.mutate(&id, |s| Ok(s.edit_aoi_geometry(&aoi_id, shape)?)).await
}

async fn put_twis(State(st): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<Mutated>> {
    let twis = if body.iter().all(u8::is_ascii_whitespace) {
        Vec::new()
    } else {
        ingest::parse_twi_tsv(&body)?
    };
    st.mutate(&id, |s| Ok(s.set_twis(twis)?)).await
}

async fn put_groups(State(st): State<AppState>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<Mutated>> {
    let table = ingest::parse_groups_json(&body)?;
    st.mutate(&id, |s| Ok(s.set_groups(&table)?)).await
}

fn parse_dimension(s: &str) -> ApiResult<Dimension> {
    match s {
        "sample" | "samples" => Ok(Dimension::Sample),
        "aoi" | "aois" => Ok(Dimension::Aoi),
        "twi" | "twis" => Ok(Dimension::Twi),
        _ => Err(ApiError::bad("invalid_params", format!("unknown dimension `{s}`"))),
    }
}

async fn put_group_assignments(
    State(st): State<AppState>,
    UrlPath((id, dim)): UrlPath<(String, String)>,
    Json(assign): Json<BTreeMap<String, Gid>>,
) -> ApiResult<Json<Mutated>> {
    let dim = parse_dimension(&dim)?;
    st.mutate(&id, |s| Ok(s.edit_groups(dim, &assign)?)).await
}

/// Partial parameter update; omitted sections keep their values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsPatch {
    detection: Option<DetectionParams>,
    kde: Option<KdeParams>,
    bundle: Option<BundleParams>,
    nw: Option<NwScoring>,
    pct_denominator: Option<PctDenominator>,
}

async fn put_params(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(p): Json<ParamsPatch>,
) -> ApiResult<Json<Mutated>> {
    st.mutate(&id, |s| {
        let mut next = s.clone();
        if let Some(d) = p.detection {
            next = next.set_detection(d)?;
        }
        let mut params = next.params().clone();
        params.kde = p.kde.unwrap_or(params.kde);
        params.bundle = p.bundle.unwrap_or(params.bundle);
        params.nw = p.nw.unwrap_or(params.nw);
        params.pct_denominator = p.pct_denominator.unwrap_or(params.pct_denominator);
        Ok(next.set_params(params)?)
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScopePatch {
    scope: Option<String>,
    time_fraction: Option<f64>,
}

fn parse_scope(s: &str) -> ApiResult<Scope> {
    s.parse().map_err(|e: String| ApiError::bad("invalid_scope", e))
}

async fn put_scope(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(p): Json<ScopePatch>,
) -> ApiResult<Json<Mutated>> {
    let scope = p.scope.as_deref().map(parse_scope).transpose()?;
    st.mutate(&id, |s| {
        let mut next = s.clone();
        if let Some(scope) = scope {
            next = next.set_scope(scope)?;
        }
        if let Some(f) = p.time_fraction {
            next = next.set_time_fraction(f)?;
        }
        Ok(next)
    })
    .await
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true))
}

async fn put_ordering(
    State(st): State<AppState>,
    UrlPath((id, matrix_id)): UrlPath<(String, String)>,
    Json(o): Json<Reordering>,
) -> ApiResult<Json<Mutated>> {
    if !is_permutation(&o.row_perm) || !is_permutation(&o.col_perm) {
        return Err(ApiError::bad("invalid_params", "orderings must be permutations"));
    }
    st.mutate(&id, |s| Ok(s.set_ordering(&matrix_id, o))).await
}

async fn get_notes(State(st): State<AppState>, UrlPath(id): UrlPath<String>, uri: Uri) -> ApiResult<Response> {
    st.cached(&id, &uri, |s| json(s.notes())).await
}

async fn put_notes(
    State(st): State<AppState>,
    UrlPath((id, sample)): UrlPath<(String, String)>,
    Json(notes): Json<Vec<Note>>,
) -> ApiResult<Json<Mutated>> {
    st.mutate(&id, |s| Ok(s.set_notes(&sample, notes)?)).await
}

#[derive(Debug, Clone, Default, Deserialize)]
struct EventQuery {
    scope: Option<String>,
    sample: Option<String>,
}

/// Scoped view for event queries; `animate` applies the session's time fraction.
fn event_view(s: &Session, q: &EventQuery, animate: bool) -> ApiResult<ScopedView> {
    let scope = match &q.scope {
        Some(x) => parse_scope(x)?,
        None => s.scope().clone(),
    };
    let mut view = s.resolve_scope(&scope)?;
    if let Some(sample) = &q.sample {
        if s.dataset().sample(sample).is_none() {
            return Err(ApiError::not_found(format!("no sample `{sample}`")));
        }
        view.samples.retain(|x| &x.sample_id == sample);
    }
    Ok(if animate {
        time_fraction_filter(&view, s.time_fraction())
    } else {
        view
    })
}

#[derive(Serialize)]
struct PerSample<T> {
    sample_id: String,
    #[serde(flatten)]
    data: T,
}

#[derive(Serialize)]
struct Versioned<T> {
    version: u64,
    #[serde(flatten)]
    data: T,
}

#[derive(Serialize)]
struct Samples<T> {
    samples: Vec<PerSample<T>>,
}

fn per_sample<T: Serialize>(s: &Session, view: &ScopedView, f: impl Fn(&crate::session::ScopedSample) -> T) -> ApiResult<(&'static str, Vec<u8>)> {
    json(&Versioned {
        version: s.version(),
        data: Samples {
            samples: view
                .samples
                .iter()
                .map(|x| PerSample {
                    sample_id: x.sample_id.clone(),
                    data: f(x),
                })
                .collect(),
        },
    })
}

#[derive(Serialize)]
struct FixationList {
    fixations: Vec<Fixation>,
}

#[derive(Serialize)]
struct SaccadeList {
    saccades: Vec<Saccade>,
}

#[derive(Serialize)]
struct LabelList {
    labels: Vec<LabeledFixation>,
}

async fn get_fixations(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let view = event_view(s, &q, true)?;
        per_sample(s, &view, |x| FixationList {
            fixations: x.fixations.iter().map(|l| l.fixation.clone()).collect(),
        })
    })
    .await
}

async fn get_saccades(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let view = event_view(s, &q, true)?;
        per_sample(s, &view, |x| SaccadeList {
            saccades: x.saccades.clone(),
        })
    })
    .await
}

async fn get_labels(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let view = event_view(s, &q, true)?;
        per_sample(s, &view, |x| LabelList {
            labels: x.fixations.clone(),
        })
    })
    .await
}

#[derive(Debug, Deserialize)]
struct MetricsQuery {
    scope: Option<String>,
    #[serde(default)]
    format: Option<String>,
}

async fn get_metrics(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<MetricsQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let scope = match &q.scope {
            Some(x) => parse_scope(x)?,
            None => s.scope().clone(),
        };
        let rows = bundle::summary_rows(s, &scope)?;
        match q.format.as_deref() {
            Some("tsv") => Ok(("text/tab-separated-values", bundle::summary_tsv(&rows).into_bytes())),
            None | Some("json") => json(&Versioned {
                version: s.version(),
                data: serde_json::json!({ "rows": rows }),
            }),
            Some(other) => Err(ApiError::bad("invalid_params", format!("unknown format `{other}`"))),
        }
    })
    .await
}

#[derive(Debug, Deserialize)]
struct MatrixQuery {
    rows: String,
    cols: String,
    metric: String,
    scope: Option<String>,
    reorder: Option<String>,
    sort_axis: Option<Axis>,
    sort_key: Option<String>,
    sort_dir: Option<Direction>,
}

/// A matrix in display order.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixView {
    pub version: u64,
    pub matrix_id: String,
    pub row_dim: EntityDim,
    pub col_dim: EntityDim,
    pub metric_id: String,
    pub symmetric: bool,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
}

fn parse_dim(s: &str) -> ApiResult<EntityDim> {
    s.parse().map_err(|e: String| ApiError::bad("invalid_params", e))
}

fn matrix_view(s: &Session, q: &MatrixQuery) -> ApiResult<MatrixView> {
    let rows = parse_dim(&q.rows)?;
    let cols = parse_dim(&q.cols)?;
    let scope = match &q.scope {
        Some(x) => parse_scope(x)?,
        None => s.scope().clone(),
    };
    let mut m = matrix::relationship_matrix(s, rows, cols, &q.metric, &scope)?;
    match q.reorder.as_deref() {
        Some("global") => {
            if m.n_rows() > 0 && m.n_cols() > 0 {
                let o = seriation::reorder_global(&m)?;
                m.row_order = o.row_perm;
                m.col_order = o.col_perm;
            }
        }
        None | Some("none") => {
            if let Some(o) = s.orderings().get(&m.matrix_id()) {
                if o.row_perm.len() == m.n_rows() && o.col_perm.len() == m.n_cols() {
                    m.row_order = o.row_perm.clone();
                    m.col_order = o.col_perm.clone();
                }
            }
        }
        Some(other) => return Err(ApiError::bad("invalid_params", format!("reorder must be global or none, got `{other}`"))),
    }
    if let Some(axis) = q.sort_axis {
        let key = q
            .sort_key
            .as_deref()
            .ok_or_else(|| ApiError::bad("invalid_params", "sort_axis needs sort_key"))?;
        let ids = match axis {
            Axis::Row => &m.row_ids,
            Axis::Col => &m.col_ids,
        };
        let index = ids
            .iter()
            .position(|x| x == key)
            .ok_or_else(|| ApiError::bad("seriation", format!("unknown sort key `{key}`")))?;
        let perm = seriation::sort_local(&m, axis, index, q.sort_dir.unwrap_or(Direction::Asc))?;
        match axis {
            Axis::Row => m.col_order = perm,
            Axis::Col => m.row_order = perm,
        }
    }
    Ok(MatrixView {
        version: s.version(),
        matrix_id: m.matrix_id(),
        row_ids: m.display_row_ids().into_iter().map(String::from).collect(),
        col_ids: m.display_col_ids().into_iter().map(String::from).collect(),
        values: m.display_values(),
        row_dim: m.row_dim,
        col_dim: m.col_dim,
        metric_id: m.metric_id,
        symmetric: m.symmetric,
        row_order: m.row_order,
        col_order: m.col_order,
    })
}

async fn get_matrix(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<MatrixQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| json(&matrix_view(s, &q)?)).await
}

#[derive(Debug, Deserialize)]
struct HistogramQuery {
    metric: String,
    bins: Option<usize>,
    scope: Option<String>,
    sample: Option<String>,
}

async fn get_histogram(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<HistogramQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let eq = EventQuery {
            scope: q.scope.clone(),
            sample: q.sample.clone(),
        };
        let view = event_view(s, &eq, false)?;
        let fix = || view.samples.iter().flat_map(|x| x.fixations.iter().map(|l| &l.fixation));
        let sac = || view.samples.iter().flat_map(|x| x.saccades.iter());
        let values: Vec<f64> = match q.metric.as_str() {
            "fixation_duration" => fix().map(|f| f.duration).collect(),
            "saccade_length" => sac().map(|c| c.length).collect(),
            "saccade_duration" => sac().map(|c| c.duration).collect(),
            other => {
                return Err(ApiError::bad(
                    "invalid_params",
                    format!("histogram metric must be fixation_duration, saccade_length or saccade_duration, got `{other}`"),
                ))
            }
        };
        let bins = q.bins.unwrap_or(10).clamp(1, 1000);
        json(&Versioned {
            version: s.version(),
            data: metrics::histogram(&values, bins),
        })
    })
    .await
}

#[derive(Debug, Deserialize)]
struct DensityQuery {
    scope: Option<String>,
    sample: Option<String>,
    bandwidth: Option<f64>,
    kernel: Option<Kernel>,
    weighting: Option<Weighting>,
    grid_width: Option<usize>,
}

async fn get_density(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<DensityQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let mut kde = s.params().kde;
        kde.bandwidth = q.bandwidth.unwrap_or(kde.bandwidth);
        kde.kernel = q.kernel.unwrap_or(kde.kernel);
        kde.weighting = q.weighting.unwrap_or(kde.weighting);
        kde.grid_width = q.grid_width.unwrap_or(kde.grid_width);
        kde.check()?;
        let eq = EventQuery {
            scope: q.scope.clone(),
            sample: q.sample.clone(),
        };
        // Bounds come from the full scope so the grid stays put while animating.
        let all: Vec<Fixation> = event_view(s, &eq, false)?
            .samples
            .iter()
            .flat_map(|x| x.fixations.iter().map(|l| l.fixation.clone()))
            .collect();
        let bounds = Bounds::around(&all, 4.0 * kde.bandwidth).ok_or(SpatialError::EmptySelection)?;
        let shown: Vec<Fixation> = event_view(s, &eq, true)?
            .samples
            .iter()
            .flat_map(|x| x.fixations.iter().map(|l| l.fixation.clone()))
            .collect();
        let grid = spatial::density_grid(&shown, bounds, &kde)?;
        json(&Versioned {
            version: s.version(),
            data: grid,
        })
    })
    .await
}

#[derive(Debug, Deserialize)]
struct BundleQuery {
    scope: Option<String>,
    sample: Option<String>,
    iterations: Option<usize>,
}

#[derive(Serialize)]
struct BundledSaccade {
    sample_id: String,
    from_fixation: usize,
    to_fixation: usize,
    points: Vec<(f64, f64)>,
}

async fn get_bundles(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<BundleQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let mut params = s.params().bundle;
        params.iterations = q.iterations.unwrap_or(params.iterations);
        params.check()?;
        let eq = EventQuery {
            scope: q.scope.clone(),
            sample: q.sample.clone(),
        };
        let view = event_view(s, &eq, true)?;
        let mut meta = Vec::new();
        let mut segments = Vec::new();
        for x in &view.samples {
            let by_index: HashMap<usize, &Fixation> = x.fixations.iter().map(|l| (l.fixation.index, &l.fixation)).collect();
            for c in &x.saccades {
                segments.push(Segment::between(by_index[&c.from_fixation], by_index[&c.to_fixation]));
                meta.push((x.sample_id.clone(), c.from_fixation, c.to_fixation));
            }
        }
        let lines = spatial::bundle_saccades(&segments, &params)?;
        let out: Vec<BundledSaccade> = meta
            .into_iter()
            .zip(lines)
            .map(|((sample_id, from_fixation, to_fixation), points)| BundledSaccade {
                sample_id,
                from_fixation,
                to_fixation,
                points,
            })
            .collect();
        json(&Versioned {
            version: s.version(),
            data: serde_json::json!({ "polylines": out }),
        })
    })
    .await
}

#[derive(Serialize)]
struct TimelineSegment {
    t_start: f64,
    t_end: f64,
    aoi_id: Option<String>,
    gid: Gid,
}

#[derive(Serialize)]
struct Timeline {
    gid: Gid,
    segments: Vec<TimelineSegment>,
}

async fn get_timeline(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<EventQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let view = event_view(s, &q, true)?;
        let aoi_gid: HashMap<&str, Gid> = s.dataset().aois.iter().map(|a| (a.id.as_str(), a.group_id)).collect();
        per_sample(s, &view, |x| Timeline {
            gid: x.group_id,
            segments: x
                .fixations
                .iter()
                .map(|l| TimelineSegment {
                    t_start: l.fixation.t_start,
                    t_end: l.fixation.t_end,
                    gid: l.aoi_id.as_deref().and_then(|a| aoi_gid.get(a).copied()).unwrap_or(0),
                    aoi_id: l.aoi_id.clone(),
                })
                .collect(),
        })
    })
    .await
}

#[derive(Debug, Deserialize)]
struct FocusQuery {
    aoi: String,
    scope: Option<String>,
    sample: Option<String>,
}

#[derive(Serialize)]
struct ClassifiedFixation {
    fixation: usize,
    class: ContextClass,
}

async fn get_focus_context(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<FocusQuery>,
    uri: Uri,
) -> ApiResult<Response> {
    st.cached(&id, &uri, move |s| {
        let eq = EventQuery {
            scope: q.scope.clone(),
            sample: q.sample.clone(),
        };
        let view = event_view(s, &eq, false)?;
        let aois = &s.dataset().aois;
        let mut samples = Vec::with_capacity(view.samples.len());
        for x in &view.samples {
            let classes = aoi::focus_context(&x.fixations, &q.aoi, aois)?;
            samples.push(PerSample {
                sample_id: x.sample_id.clone(),
                data: serde_json::json!({
                    "classes": x.fixations.iter().zip(classes).map(|(l, class)| ClassifiedFixation {
                        fixation: l.fixation.index,
                        class,
                    }).collect::<Vec<_>>()
                }),
            });
        }
        // Sessions without samples still validate the focus AOI.
        if view.samples.is_empty() {
            aoi::focus_context(&[], &q.aoi, aois)?;
        }
        json(&Versioned {
            version: s.version(),
            data: serde_json::json!({ "aoi": q.aoi, "samples": samples }),
        })
    })
    .await
}

async fn get_export(State(st): State<AppState>, UrlPath(id): UrlPath<String>, uri: Uri) -> ApiResult<Response> {
    st.cached(&id, &uri, |s| Ok(("application/zip", bundle::export_bundle(s)))).await
}

#[derive(Serialize)]
struct Imported {
    session_id: String,
    version: u64,
    warnings: Vec<String>,
}

async fn import_new(State(st): State<AppState>, body: Bytes) -> ApiResult<Json<Imported>> {
    let (session, warnings) = bundle::import_bundle(&body)?;
    let version = session.version();
    let session_id = st.insert(session);
    Ok(Json(Imported {
        session_id,
        version,
        warnings: warnings.iter().map(ToString::to_string).collect(),
    }))
}

/// Replaces a session's content with a bundle. The version keeps increasing.
async fn import_into(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<Imported>> {
    let (imported, warnings) = bundle::import_bundle(&body)?;
    let slot = st.slot(&id)?;
    let _guard = slot.writer.lock().await;
    let floor = slot.snapshot().version() + 1;
    let next = imported.at_least_version(floor);
    let version = next.version();
    *slot.current.write().expect("session lock") = Arc::new(next);
    Ok(Json(Imported {
        session_id: id,
        version,
        warnings: warnings.iter().map(ToString::to_string).collect(),
    }))
}

async fn save_bundle(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let dir = st
        .0
        .data_dir
        .clone()
        .ok_or_else(|| ApiError::bad("no_data_dir", "server has no data directory"))?;
    let session = st.slot(&id)?.snapshot();
    let path = dir.join(format!("{id}.zip"));
    let bytes = tokio::task::spawn_blocking(move || bundle::export_bundle(&session))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))?;
    tokio::fs::write(&path, bytes)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e))?;
    Ok(Json(serde_json::json!({ "path": path.display().to_string() })))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => JSON,
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

async fn static_asset(State(st): State<AppState>, uri: Uri) -> Response {
    let not_found = || ApiError::not_found(format!("no route for {}", uri.path())).into_response();
    let Some(root) = st.0.ui_dir.clone() else {
        return not_found();
    };
    if uri.path().starts_with("/api/") {
        return not_found();
    }
    let rel = Path::new(uri.path().trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return not_found();
    }
    let mut path = root.join(rel);
    if uri.path() == "/" || path.is_dir() {
        path = path.join("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => not_found(),
    }
}
