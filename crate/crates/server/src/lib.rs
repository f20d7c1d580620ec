//! JSON API for the cube explorer and scripted clients.
//!
//! | route | does |
//! |---|---|
//! | `GET /schema` | dimensions, hierarchies, levels, attributes, measures |
//! | `GET /members?dimension=&level=&page=&page_size=` | members of a level, by IRI |
//! | `POST /compile` | `{cql, scenario?, strategies?}` to simplified CQL and SPARQL |
//! | `POST /execute` | `{cql \| sparql, scenario?, strategies?}` to a result table |
//!
//! Errors are `{"error": {"code", "message"}, "diagnostics"?: [...]}` with
//! 400 for unreadable bodies, 404 for unknown names, 409 when no endpoint
//! is configured, 422 for CQL problems and 502 for endpoint failures.

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cubeql_client::cube::{fetch_level_stats, fetch_schema};
use cubeql_client::SparqlClient;
use cubeql_core::config::Config;
use cubeql_core::instance::CubeInstance;
use cubeql_core::optimize::{parse_strategies, LevelStats, ScenarioId};
use cubeql_core::pipeline::{compile, Context, Diagnostic, Improvement, PipelineError};
use cubeql_core::rdf::Prefixes;
use cubeql_core::table::{ResultTable, Value};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::sync::Arc;
use std::time::Instant;
use tokio::sync::OnceCell;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

/// What the service learns from the endpoint once and keeps.
struct Loaded {
    cube: CubeInstance,
    stats: LevelStats,
}

struct Inner {
    config: Option<Config>,
    client: Option<SparqlClient>,
    prefixes: Prefixes,
    loaded: OnceCell<Arc<Loaded>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: Option<Config>) -> Self {
        let client = config.as_ref().map(SparqlClient::from_config);
        let prefixes = config.as_ref().map(Config::prefix_table).unwrap_or_else(cubeql_core::qb4olap::standard_prefixes);
        AppState(Arc::new(Inner { config, client, prefixes, loaded: OnceCell::new() }))
    }
}

struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    diagnostics: Option<Vec<Diagnostic>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl ToString) -> Self {
        ApiError { status, code: code.to_string(), message: message.to_string(), diagnostics: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": { "code": self.code, "message": self.message } });
        if let Some(d) = self.diagnostics {
            body["diagnostics"] = json!(d);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match e {
            PipelineError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            PipelineError::Optimize(ref o) if o.code() == "INVALID_ARGUMENT" => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError { status, code: e.code().to_string(), message: e.to_string(), diagnostics: Some(e.diagnostics()) }
    }
}

fn endpoint_error(code: &str, message: impl ToString) -> ApiError {
    ApiError::new(StatusCode::BAD_GATEWAY, code, message)
}

fn not_configured() -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "NOT_CONFIGURED",
        "no endpoint configured; start the service with --config <file> (endpoint, schema_graph, instance_graph, dataset)",
    )
}

impl AppState {
    fn client(&self) -> Result<(&Config, &SparqlClient), ApiError> {
        match (&self.0.config, &self.0.client) {
            (Some(c), Some(k)) => Ok((c, k)),
            _ => Err(not_configured()),
        }
    }

    async fn loaded(&self) -> Result<Arc<Loaded>, ApiError> {
        let (cfg, client) = self.client()?;
        self.0
            .loaded
            .get_or_try_init(|| async {
                let (cube, _) = fetch_schema(client, &cfg.graphs).await.map_err(|e| match e {
                    cubeql_client::cube::CubeError::Exec(x) => endpoint_error(x.code(), x),
                    other => ApiError::new(StatusCode::BAD_GATEWAY, other.code(), other),
                })?;
                let stats = fetch_level_stats(client, &cfg.graphs).await.map_err(|e| endpoint_error(e.code(), e))?;
                Ok(Arc::new(Loaded { cube, stats }))
            })
            .await
            .cloned()
    }
}

async fn schema(State(st): State<AppState>) -> Result<Response, ApiError> {
    let l = st.loaded().await?;
    Ok(Json(&l.cube.schema).into_response())
}

#[derive(Deserialize)]
struct MembersQuery {
    dimension: String,
    level: String,
    #[serde(default)]
    page: usize,
    page_size: Option<usize>,
}

#[derive(Serialize)]
struct Member {
    iri: String,
    attributes: serde_json::Map<String, serde_json::Value>,
}

async fn members(State(st): State<AppState>, Query(q): Query<MembersQuery>) -> Result<Response, ApiError> {
    let l = st.loaded().await?;
    let s = &l.cube.schema;
    let d = s
        .dimensions
        .iter()
        .find(|d| d.answers_to(&q.dimension))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_NAME", format!("no dimension {}", q.dimension)))?;
    let level = d
        .level(&q.level)
        .filter(|l| !l.is_all())
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_NAME", format!("no level {} in {}", q.level, d.name)))?;
    let mut all: Vec<&String> = l.cube.dimensions.members_of(&level.iri).iter().collect();
    all.sort();
    let size = q.page_size.unwrap_or(50).clamp(1, 1000);
    let page: Vec<Member> = all
        .iter()
        .skip(q.page.saturating_mul(size))
        .take(size)
        .map(|m| Member {
            iri: m.to_string(),
            attributes: level
                .attributes
                .iter()
                .filter_map(|a| l.cube.dimensions.attribute(m, &a.iri).map(|v| (a.name.clone(), json!(v.lexical))))
                .collect(),
        })
        .collect();
    Ok(Json(json!({
        "dimension": d.name,
        "level": level.name,
        "level_iri": level.iri,
        "total": all.len(),
        "page": q.page,
        "page_size": size,
        "members": page,
    }))
    .into_response())
}

#[derive(Deserialize, Default)]
struct CompileRequest {
    cql: Option<String>,
    sparql: Option<String>,
    scenario: Option<String>,
    strategies: Option<String>,
}

fn read_body(body: &Bytes) -> Result<CompileRequest, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", "empty body"));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", e))
}

fn improvement(r: &CompileRequest) -> Result<Improvement, ApiError> {
    let bad = |e: String| ApiError::new(StatusCode::BAD_REQUEST, "INVALID_ARGUMENT", e);
    match (r.scenario.as_deref().map(str::trim), r.strategies.as_deref()) {
        (Some(s), _) if !s.is_empty() && !s.eq_ignore_ascii_case("naive") => {
            Ok(Improvement::Scenario(s.parse::<ScenarioId>().map_err(|e| bad(e.to_string()))?))
        }
        (_, Some(list)) if !list.trim().is_empty() => {
            Ok(Improvement::Strategies(parse_strategies(list).map_err(|e| bad(e.to_string()))?))
        }
        _ => Ok(Improvement::None),
    }
}

fn run_compile(st: &AppState, l: &Loaded, cql: &str, imp: &Improvement) -> Result<cubeql_core::pipeline::Compiled, ApiError> {
    let (cfg, _) = st.client()?;
    let cx = Context { schema: &l.cube.schema, graphs: &cfg.graphs, prefixes: &st.0.prefixes, stats: &l.stats };
    Ok(compile(cql, &cx, imp)?)
}

async fn compile_route(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req = read_body(&body)?;
    let Some(cql) = req.cql.as_deref() else {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", "missing field cql"));
    };
    let imp = improvement(&req)?;
    let l = st.loaded().await?;
    let c = run_compile(&st, &l, cql, &imp)?;
    let mut notes = c.naive.notes.clone();
    if let Some(i) = &c.improved {
        notes = i.notes.clone();
    }
    Ok(Json(json!({
        "simplified_cql": c.simplified.program.to_string(),
        "rewrite_trace": c.trace.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "naive_sparql": c.naive_sparql(),
        "improved_sparql": c.improved_sparql(),
        "diagnostics": { "well_formed": true, "class": c.class.as_str(), "violations": [] },
        "notes": notes,
    }))
    .into_response())
}

fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Iri(s) | Value::Literal(s) => json!(s),
        Value::Number(n) => json!(n),
        Value::Null => serde_json::Value::Null,
    }
}

fn table_json(t: &ResultTable, ms: f64, executed: &str) -> serde_json::Value {
    json!({
        "columns": t.columns,
        "rows": t.rows.iter().map(|r| r.iter().map(value_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "timing_ms": ms,
        "executed_sparql": executed,
    })
}

async fn execute(State(st): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req = read_body(&body)?;
    let (_, client) = st.client()?;
    let (table, text, ms) = match (&req.cql, &req.sparql) {
        (Some(cql), _) => {
            let imp = improvement(&req)?;
            let l = st.loaded().await?;
            let c = run_compile(&st, &l, cql, &imp)?;
            let ir = c.final_ir();
            let text = cubeql_core::sparql::render(ir);
            let t0 = Instant::now();
            let t = client.execute(ir).await.map_err(|e| endpoint_error(e.code(), e))?;
            (t, text, t0.elapsed().as_secs_f64() * 1000.0)
        }
        (None, Some(q)) => {
            let t0 = Instant::now();
            let t = client.select(q).await.map_err(|e| endpoint_error(e.code(), e))?;
            (t, q.clone(), t0.elapsed().as_secs_f64() * 1000.0)
        }
        (None, None) => return Err(ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", "give cql or sparql")),
    };
    Ok(Json(table_json(&table, ms, &text)).into_response())
}

/// CORS for `origins`; `None` allows any origin.
pub fn cors(origins: Option<Vec<String>>) -> CorsLayer {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    match origins {
        None => layer.allow_origin(Any),
        Some(list) => {
            let vals: Vec<HeaderValue> = list.iter().filter_map(|o| o.parse().ok()).collect();
            layer.allow_origin(AllowOrigin::list(vals))
        }
    }
}

pub fn app(state: AppState, cors_origins: Option<Vec<String>>) -> Router {
    Router::new()
        .route("/schema", get(schema))
        .route("/members", get(members))
        .route("/compile", post(compile_route))
        .route("/execute", post(execute))
        .layer(cors(cors_origins))
        .with_state(state)
}

/// Serves the API on `addr` until the process stops.
pub async fn serve(config: Option<Config>, addr: std::net::SocketAddr, cors_origins: Option<Vec<String>>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("api on http://{}", listener.local_addr()?);
    axum::serve(listener, app(AppState::new(config), cors_origins)).await
}
