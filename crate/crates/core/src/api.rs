//! Read-only JSON API over an immutable analysis snapshot.
//!
//! Clustering, triage and insights are computed once when the snapshot is
//! built; handlers only read from it.

use std::collections::{BTreeMap, HashMap};
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode, Uri};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cluster::{ExternalCluster, SubGroup};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::extractor::CaseRecord;
use crate::insights::{filter_by_tags, TagJustification, TagQuery, TagVocabulary};
use crate::pipeline::{self, Analysis};
use crate::store::Store;
use crate::triage::{Band, PriorityResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiConfig {
    /// `host:port`
    pub bind_address: String,
    pub db_path: PathBuf,
    /// Directory with the built dashboard, served for non-API paths.
    pub static_assets_dir: Option<PathBuf>,
}

impl ApiConfig {
    pub fn socket_addr(&self) -> Result<SocketAddr> {
        let addr = self
            .bind_address
            .to_socket_addrs()
            .map_err(|e| Error::InvalidArgument(format!("bad bind address `{}`: {e}", self.bind_address)))?
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("bind address `{}` resolves to nothing", self.bind_address)))?;
        if addr.port() == 0 {
            return Err(Error::InvalidArgument("port must be in [1, 65535]".into()));
        }
        Ok(addr)
    }
}

/// Case list entry: identity plus the tag fields the dashboard filters on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub source_org: String,
    pub year: i32,
    pub month: String,
    pub platforms: Vec<String>,
    pub case_topics: Vec<String>,
    pub severity_indicators: Vec<String>,
    pub investigation_types: Vec<String>,
    pub relationship_to_victim: String,
    pub registered_sex_offender: bool,
    pub victim_count: Option<u32>,
    pub perpetrator_age: Option<u32>,
    pub clusters: Vec<String>,
    pub priority_score: Option<f64>,
    pub priority_band: Option<Band>,
}

pub struct Snapshot {
    records: Vec<CaseRecord>,
    index: HashMap<String, usize>,
    analysis: Analysis,
    vocabulary: TagVocabulary,
    clusters_of: HashMap<String, Vec<String>>,
    priority_of: HashMap<String, usize>,
}

impl Snapshot {
    pub fn build(records: Vec<CaseRecord>, config: &Config) -> Result<Self> {
        let analysis = pipeline::analyze(&records, config)?;
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.case_id.clone(), i))
            .collect();
        let mut clusters_of: HashMap<String, Vec<String>> = HashMap::new();
        for c in &analysis.clusters.clusters {
            for id in &c.member_case_ids {
                clusters_of.entry(id.clone()).or_default().push(c.name.clone());
            }
        }
        let priority_of = analysis
            .triage
            .iter()
            .enumerate()
            .map(|(i, p)| (p.case_id.clone(), i))
            .collect();
        Ok(Self {
            records,
            index,
            analysis,
            vocabulary: TagVocabulary::from_config(config),
            clusters_of,
            priority_of,
        })
    }

    /// Reads every case through a read-only handle and analyzes them.
    pub fn load(db_path: &Path, config: &Config) -> Result<Self> {
        let store = Store::open_read_only(db_path)?;
        Self::build(store.all_cases()?, config)
    }

    pub fn records(&self) -> &[CaseRecord] {
        &self.records
    }

    pub fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    fn case(&self, id: &str) -> Option<&CaseRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    fn priority(&self, id: &str) -> Option<&PriorityResult> {
        self.priority_of.get(id).map(|&i| &self.analysis.triage[i])
    }

    fn summary(&self, r: &CaseRecord) -> CaseSummary {
        let f = &r.features;
        let list = |s: &std::collections::BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>();
        let priority = self.priority(&r.case_id);
        CaseSummary {
            case_id: r.case_id.clone(),
            source_org: r.source_org.clone(),
            year: r.year,
            month: r.month.clone(),
            platforms: list(&f.platforms),
            case_topics: list(&f.case_topics),
            severity_indicators: list(&f.severity_indicators),
            investigation_types: list(&f.investigation_type),
            relationship_to_victim: f.relationship_to_victim.clone(),
            registered_sex_offender: f.registered_sex_offender,
            victim_count: f.victim_count,
            perpetrator_age: f.perpetrator_age,
            clusters: self.clusters_of.get(&r.case_id).cloned().unwrap_or_default(),
            priority_score: priority.map(|p| p.normalized_score),
            priority_band: priority.map(|p| p.band),
        }
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

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

type Shared = Arc<AppState>;

struct AppState {
    snapshot: Snapshot,
    static_dir: Option<PathBuf>,
}

pub fn router(snapshot: Snapshot, static_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState { snapshot, static_dir });
    Router::new()
        .route("/api/health", get(health))
        .route("/api/cases", get(list_cases))
        .route("/api/cases/{id}", get(get_case))
        .route("/api/clusters", get(clusters))
        .route("/api/clusters/{name}/groups", get(cluster_groups))
        .route("/api/triage", get(triage))
        .route("/api/insights", get(insights))
        .route("/api/filter", post(filter))
        .route("/api/tags", get(tags))
        .fallback(fallback)
        .layer(middleware::from_fn(cors))
        .with_state(state)
}

async fn cors(request: Request, next: Next) -> Response {
    let mut response = if request.method() == Method::OPTIONS {
        StatusCode::NO_CONTENT.into_response()
    } else {
        next.run(request).await
    };
    let headers = response.headers_mut();
    headers.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, HeaderValue::from_static("*"));
    headers.insert(header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, POST, OPTIONS"));
    headers.insert(header::ACCESS_CONTROL_ALLOW_HEADERS, HeaderValue::from_static("content-type"));
    response
}

async fn health(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "version": VERSION,
        "case_count": s.snapshot.records.len(),
    }))
}

fn parse_year(params: &HashMap<String, String>, key: &str) -> std::result::Result<Option<i32>, ApiError> {
    params
        .get(key)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<i32>()
                .map_err(|_| ApiError::bad_request("bad_param", format!("{key} must be an integer year, got `{v}`")))
        })
        .transpose()
}

async fn list_cases(
    State(s): State<Shared>,
    Query(params): Query<HashMap<String, String>>,
) -> std::result::Result<Json<serde_json::Value>, ApiError> {
    if let Some(k) = params.keys().find(|k| !matches!(k.as_str(), "org" | "year_from" | "year_to" | "month")) {
        return Err(ApiError::bad_request("bad_param", format!("unknown parameter `{k}`")));
    }
    let org = params.get("org").filter(|v| !v.is_empty());
    let month = params.get("month").filter(|v| !v.is_empty());
    let year_from = parse_year(&params, "year_from")?;
    let year_to = parse_year(&params, "year_to")?;
    if let (Some(a), Some(b)) = (year_from, year_to) {
        if a > b {
            return Err(ApiError::bad_request("bad_param", "year_from is after year_to"));
        }
    }
    let cases: Vec<CaseSummary> = s
        .snapshot
        .records
        .iter()
        .filter(|r| org.is_none_or(|o| &r.source_org == o))
        .filter(|r| month.is_none_or(|m| r.month.eq_ignore_ascii_case(m)))
        .filter(|r| year_from.is_none_or(|y| r.year >= y))
        .filter(|r| year_to.is_none_or(|y| r.year <= y))
        .map(|r| s.snapshot.summary(r))
        .collect();
    Ok(Json(json!({ "count": cases.len(), "cases": cases })))
}

async fn get_case(
    State(s): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> std::result::Result<Json<serde_json::Value>, ApiError> {
    let record = s
        .snapshot
        .case(&id)
        .ok_or_else(|| ApiError::not_found(format!("no case `{id}`")))?;
    Ok(Json(json!({
        "case": record,
        "clusters": s.snapshot.clusters_of.get(&id).cloned().unwrap_or_default(),
        "priority": s.snapshot.priority(&id),
    })))
}

async fn clusters(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(&s.snapshot.analysis.clusters).unwrap_or_default())
}

#[derive(Serialize)]
struct GroupsResponse<'a> {
    cluster: &'a str,
    groups: &'a [SubGroup],
    ungrouped_case_ids: &'a [String],
}

async fn cluster_groups(
    State(s): State<Shared>,
    UrlPath(name): UrlPath<String>,
) -> std::result::Result<Response, ApiError> {
    let known = ExternalCluster::parse(&name).ok_or_else(|| ApiError::not_found(format!("no cluster `{name}`")))?;
    let cluster = s
        .snapshot
        .analysis
        .clusters
        .cluster(known.name())
        .ok_or_else(|| ApiError::not_found(format!("no cluster `{name}`")))?;
    Ok(Json(GroupsResponse {
        cluster: &cluster.name,
        groups: &cluster.subgroups,
        ungrouped_case_ids: &cluster.ungrouped_case_ids,
    })
    .into_response())
}

async fn triage(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({
        "summary": s.snapshot.analysis.triage_summary,
        "results": s.snapshot.analysis.triage,
    }))
}

async fn insights(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(&s.snapshot.analysis.insights).unwrap_or_default())
}

async fn tags(State(s): State<Shared>) -> Json<serde_json::Value> {
    let categories: BTreeMap<&str, &Vec<String>> = s
        .snapshot
        .vocabulary
        .categories
        .iter()
        .map(|(c, v)| (c.name(), v))
        .collect();
    Json(json!({ "categories": categories }))
}

#[derive(Serialize)]
struct FilterEntry<'a> {
    case: CaseSummary,
    justifications: &'a [TagJustification],
}

async fn filter(State(s): State<Shared>, body: Bytes) -> std::result::Result<Response, ApiError> {
    let query: TagQuery = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("malformed_query", format!("expected {{\"selected_tags\": [{{\"category\", \"tag\"}}]}}: {e}")))?;
    let hits = filter_by_tags(&s.snapshot.records, &query, &s.snapshot.vocabulary).map_err(|e| match e {
        Error::UnknownTag { .. } => ApiError::bad_request("unknown_tag", e.to_string()),
        other => ApiError::bad_request("invalid_query", other.to_string()),
    })?;
    let entries: Vec<FilterEntry<'_>> = hits
        .iter()
        .map(|h| FilterEntry {
            case: s.snapshot.summary(h.record),
            justifications: &h.justifications,
        })
        .collect();
    Ok(Json(json!({ "count": entries.len(), "cases": entries })).into_response())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or_default() {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

/// Serves dashboard assets for non-API paths, falling back to `index.html`
/// so client-side routes resolve.
async fn fallback(State(s): State<Shared>, uri: Uri) -> Response {
    let path = uri.path();
    let Some(dir) = s.static_dir.as_ref().filter(|_| !path.starts_with("/api/")) else {
        return ApiError::not_found(format!("no route for {path}")).into_response();
    };
    let relative = Path::new(path.trim_start_matches('/'));
    if relative.components().any(|c| !matches!(c, Component::Normal(_))) {
        return ApiError::not_found(format!("no route for {path}")).into_response();
    }
    let mut file = dir.join(relative);
    if !file.is_file() {
        file = dir.join("index.html");
    }
    match tokio::fs::read(&file).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&file))], Body::from(bytes)).into_response(),
        Err(_) => ApiError::not_found(format!("no route for {path}")).into_response(),
    }
}

/// Loads the snapshot and serves until interrupted.
pub async fn serve(api: ApiConfig, config: Config) -> Result<()> {
    let addr = api.socket_addr()?;
    if let Some(dir) = &api.static_assets_dir {
        if !dir.is_dir() {
            return Err(Error::FileNotFound(dir.clone()));
        }
    }
    let db_path = api.db_path.clone();
    let snapshot = tokio::task::spawn_blocking(move || Snapshot::load(&db_path, &config))
        .await
        .map_err(|e| Error::InvalidArgument(format!("snapshot task failed: {e}")))??;
    let app = router(snapshot, api.static_assets_dir.clone());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
