//! HTTP API over one frozen, annotated graph.
//!
//! Routes answer 503 until [`AppState::install`] has been called, so the
//! listener can come up before a large dataset finishes loading.

use std::collections::BTreeSet;
use std::future::Future;
use std::sync::{Arc, OnceLock};

use attaingraph_core::evalstats::{genre_histograms, overall_histogram, HistogramSpec};
use attaingraph_core::graphstore::{EdgeKind, PropertyGraph, VertexKind};
use attaingraph_core::queryexec::{respond, QueryResponse};
use attaingraph_core::querylang::{parse, recommendation_query, unparse, validate, QueryError};
use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;

pub const MAX_BINS: usize = 1000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub cors_origin: String,
    /// `n` for recommendation requests that omit it.
    pub default_limit: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            cors_origin: "*".into(),
            default_limit: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexKindInfo {
    pub symbol: String,
    pub name: String,
    pub count: usize,
    pub required: String,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeKindInfo {
    pub symbol: String,
    pub name: String,
    pub source: String,
    pub target: String,
    pub undirected: bool,
    pub count: usize,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub vertex_kinds: Vec<VertexKindInfo>,
    pub edge_kinds: Vec<EdgeKindInfo>,
}

impl Schema {
    pub fn of(graph: &PropertyGraph) -> Self {
        let vertex_kinds = VertexKind::ALL
            .into_iter()
            .map(|k| {
                let attributes: BTreeSet<&str> = graph
                    .vertices_of(k)
                    .iter()
                    .flat_map(|&v| graph.vertices()[v.index()].attrs.keys().map(String::as_str))
                    .collect();
                VertexKindInfo {
                    symbol: k.symbol().into(),
                    name: format!("{k:?}"),
                    count: graph.count(k),
                    required: k.required_attr().into(),
                    attributes: attributes.into_iter().map(str::to_owned).collect(),
                }
            })
            .collect();
        let edge_kinds = EdgeKind::ALL
            .into_iter()
            .map(|k| {
                let attributes: BTreeSet<&str> = graph
                    .edges()
                    .iter()
                    .filter(|e| e.kind == k)
                    .flat_map(|e| e.attrs.keys().map(String::as_str))
                    .collect();
                let (s, t) = k.endpoints();
                EdgeKindInfo {
                    symbol: k.symbol().into(),
                    name: format!("{k:?}"),
                    source: s.symbol().into(),
                    target: t.symbol().into(),
                    undirected: k.is_undirected(),
                    count: graph.edge_count_of(k),
                    attributes: attributes.into_iter().map(str::to_owned).collect(),
                }
            })
            .collect();
        Self {
            vertex_kinds,
            edge_kinds,
        }
    }
}

struct Loaded {
    graph: PropertyGraph,
    schema: Schema,
}

struct Inner {
    config: ServiceConfig,
    data: OnceLock<Loaded>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// A state with no data yet; every route answers 503.
    pub fn loading(config: ServiceConfig) -> Self {
        Self(Arc::new(Inner {
            config,
            data: OnceLock::new(),
        }))
    }

    pub fn ready(config: ServiceConfig, graph: PropertyGraph) -> Self {
        let s = Self::loading(config);
        s.install(graph);
        s
    }

    /// Publishes the graph. Returns false if one was already installed.
    ///
    /// # Panics
    /// If the graph is not frozen.
    pub fn install(&self, graph: PropertyGraph) -> bool {
        assert!(graph.is_frozen(), "service graph must be frozen");
        let schema = Schema::of(&graph);
        self.0.data.set(Loaded { graph, schema }).is_ok()
    }

    pub fn is_ready(&self) -> bool {
        self.0.data.get().is_some()
    }

    fn loaded(&self) -> Result<&Loaded, ApiError> {
        self.0.data.get().ok_or(ApiError::Loading)
    }
}

#[derive(Debug)]
pub enum ApiError {
    Loading,
    NotFound(String),
    BadRequest(String),
    BadQuery {
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    Internal(String),
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Syntax(s) => ApiError::BadQuery {
                line: Some(s.line),
                column: Some(s.column),
                message: format!("expected {}, found {}", s.expected, s.found),
            },
            QueryError::Validation(v) => ApiError::BadQuery {
                line: None,
                column: None,
                message: v.to_string(),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Loading => (
                StatusCode::SERVICE_UNAVAILABLE,
                json!({ "message": "dataset is loading" }),
            ),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "message": m })),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "message": m })),
            ApiError::BadQuery {
                line,
                column,
                message,
            } => (
                StatusCode::BAD_REQUEST,
                json!({ "line": line, "column": column, "message": message }),
            ),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "message": m })),
        };
        let mut r = (status, Json(body)).into_response();
        if status == StatusCode::SERVICE_UNAVAILABLE {
            r.headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from_static("1"));
        }
        r
    }
}

/// Runs a CPU-bound closure against the loaded graph off the async workers.
async fn with_graph<T, F>(state: AppState, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Loaded) -> Result<T, ApiError> + Send + 'static,
{
    state.loaded()?;
    tokio::task::spawn_blocking(move || f(state.loaded()?))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

#[derive(Deserialize)]
struct QueryBody {
    text: String,
}

async fn post_query(State(state): State<AppState>, body: Bytes) -> Result<Json<QueryResponse>, ApiError> {
    state.loaded()?;
    let body: QueryBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::BadRequest(format!("expected {{\"text\": ...}}: {e}")))?;
    with_graph(state, move |d| {
        let ast = parse(&body.text).map_err(QueryError::from)?;
        let typed = validate(&ast).map_err(QueryError::from)?;
        respond(&typed, &d.graph).map(Json).map_err(|e| ApiError::BadQuery {
            line: None,
            column: None,
            message: e.to_string(),
        })
    })
    .await
}

#[derive(Deserialize)]
struct RecParams {
    exclude_owned: Option<String>,
    genre: Option<String>,
    n: Option<u64>,
}

fn flag(name: &str, v: Option<&str>) -> Result<bool, ApiError> {
    match v {
        None | Some("0" | "false" | "no") => Ok(false),
        Some("" | "1" | "true" | "yes") => Ok(true),
        Some(other) => Err(ApiError::BadRequest(format!("`{name}` must be a boolean, got `{other}`"))),
    }
}

async fn recommendations(
    State(state): State<AppState>,
    Path(steamid): Path<String>,
    Query(p): Query<RecParams>,
) -> Result<Json<QueryResponse>, ApiError> {
    let exclude = flag("exclude_owned", p.exclude_owned.as_deref())?;
    let n = p.n.unwrap_or(state.0.config.default_limit);
    if n == 0 {
        return Err(ApiError::BadRequest("`n` must be at least 1".into()));
    }
    with_graph(state, move |d| {
        if d.graph.player_by_steamid(&steamid).is_none() {
            return Err(ApiError::NotFound(format!("unknown player {steamid}")));
        }
        let ast = recommendation_query(&steamid, exclude, p.genre.as_deref(), n);
        let typed = validate(&ast).map_err(QueryError::from)?;
        let mut resp = respond(&typed, &d.graph).map_err(|e| ApiError::Internal(e.to_string()))?;
        resp.query = Some(unparse(&ast));
        Ok(Json(resp))
    })
    .await
}

#[derive(Deserialize)]
struct StatsParams {
    groupby: Option<String>,
    bins: Option<usize>,
}

async fn attainment_stats(
    State(state): State<AppState>,
    Query(p): Query<StatsParams>,
) -> Result<Json<Vec<HistogramSpec>>, ApiError> {
    let bins = p.bins.unwrap_or(50);
    if bins == 0 || bins > MAX_BINS {
        return Err(ApiError::BadRequest(format!("`bins` must be in 1..={MAX_BINS}")));
    }
    let by_genre = match p.groupby.as_deref() {
        None | Some("genre") => true,
        Some("all" | "none") => false,
        Some(other) => return Err(ApiError::BadRequest(format!("unknown groupby `{other}`"))),
    };
    with_graph(state, move |d| {
        Ok(Json(if by_genre {
            genre_histograms(&d.graph, bins)
        } else {
            vec![overall_histogram(&d.graph, bins)]
        }))
    })
    .await
}

async fn schema(State(state): State<AppState>) -> Result<Json<Schema>, ApiError> {
    Ok(Json(state.loaded()?.schema.clone()))
}

async fn cors(State(origin): State<HeaderValue>, req: Request, next: Next) -> Response {
    let mut resp = if req.method() == Method::OPTIONS {
        StatusCode::NO_CONTENT.into_response()
    } else {
        next.run(req).await
    };
    let h = resp.headers_mut();
    h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, origin);
    h.insert(
        header::ACCESS_CONTROL_ALLOW_METHODS,
        HeaderValue::from_static("GET, POST, OPTIONS"),
    );
    h.insert(
        header::ACCESS_CONTROL_ALLOW_HEADERS,
        HeaderValue::from_static("content-type"),
    );
    resp
}

pub fn router(state: AppState) -> Router {
    let origin = HeaderValue::from_str(&state.0.config.cors_origin)
        .unwrap_or_else(|_| HeaderValue::from_static("*"));
    Router::new()
        .route("/api/query", post(post_query))
        .route("/api/players/{steamid}/recommendations", get(recommendations))
        .route("/api/stats/attainment", get(attainment_stats))
        .route("/api/schema", get(schema))
        .layer(middleware::from_fn_with_state(origin, cors))
        .with_state(state)
}

pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

#[cfg(test)]
mod tests {
    use super::*;
    use attaingraph_core::fixtures;

    #[test]
    fn flags() {
        assert!(!flag("x", None).unwrap());
        assert!(flag("x", Some("")).unwrap());
        assert!(flag("x", Some("true")).unwrap());
        assert!(!flag("x", Some("0")).unwrap());
        assert!(flag("x", Some("perhaps")).is_err());
    }

    #[test]
    fn schema_of_fixture() {
        let (g, _) = fixtures::graph(false);
        let s = Schema::of(&g);
        assert_eq!(s.vertex_kinds[3].symbol, "V_R");
        assert_eq!(s.vertex_kinds[3].attributes, ["description"]);
        let friend = &s.edge_kinds[0];
        assert!(friend.undirected);
        assert_eq!((friend.count, friend.source.as_str()), (2, "V_P"));
    }

    #[test]
    fn install_once() {
        let s = AppState::loading(ServiceConfig::default());
        assert!(!s.is_ready());
        assert!(s.install(fixtures::graph(false).0));
        assert!(!s.install(fixtures::graph(true).0));
        assert!(s.is_ready());
    }
}
