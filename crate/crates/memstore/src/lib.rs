//! A SPARQL 1.1 protocol endpoint over an in-memory oxigraph store.
//!
//! Queries go to `/sparql` (GET with `?query=`, POST as a form or as
//! `application/sparql-query`), updates to `/update` (form or
//! `application/sparql-update`). SELECT and ASK answer in the JSON results
//! format, CONSTRUCT and DESCRIBE in N-Triples.

use axum::body::Bytes;
use axum::extract::{RawQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use oxigraph::io::{RdfFormat, RdfParser, RdfSerializer};
use oxigraph::model::{GraphName, NamedNode};
use oxigraph::sparql::results::{QueryResultsFormat, QueryResultsSerializer};
use oxigraph::sparql::{QueryResults, SparqlEvaluator};
use oxigraph::store::Store;
use std::net::SocketAddr;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use oxigraph;

const RESULTS_JSON: &str = "application/sparql-results+json";

/// Loads Turtle into `graph` (the default graph when `None`).
pub fn load_turtle(store: &Store, graph: Option<&str>, text: &str) -> Result<(), String> {
    let mut parser = RdfParser::from_format(RdfFormat::Turtle);
    if let Some(g) = graph {
        parser = parser.with_default_graph(GraphName::NamedNode(NamedNode::new(g).map_err(|e| e.to_string())?));
    }
    store.load_from_slice(parser, text.as_bytes()).map_err(|e| e.to_string())
}

fn bad(msg: impl ToString) -> Response {
    (StatusCode::BAD_REQUEST, msg.to_string()).into_response()
}

fn content_type(h: &HeaderMap) -> String {
    h.get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .map(|v| v.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
        .unwrap_or_default()
}

fn form_field(body: &[u8], field: &str) -> Option<String> {
    form_urlencoded::parse(body).find(|(k, _)| k == field).map(|(_, v)| v.into_owned())
}

/// The operation text from a protocol request: the form field `field`, or
/// the whole body for the direct content type `direct`.
fn operation(raw: Option<String>, h: &HeaderMap, body: &[u8], field: &str, direct: &str) -> Option<String> {
    if let Some(q) = raw.as_deref().and_then(|q| form_field(q.as_bytes(), field)) {
        return Some(q);
    }
    match content_type(h).as_str() {
        "application/x-www-form-urlencoded" => form_field(body, field),
        ct if ct == direct => String::from_utf8(body.to_vec()).ok(),
        _ => None,
    }
}

fn run_query(store: &Store, q: &str) -> Result<(Vec<u8>, &'static str), String> {
    let results = SparqlEvaluator::new().parse_query(q).map_err(|e| e.to_string())?.on_store(store).execute().map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    match results {
        QueryResults::Solutions(solutions) => {
            let mut w = QueryResultsSerializer::from_format(QueryResultsFormat::Json)
                .serialize_solutions_to_writer(&mut out, solutions.variables().to_vec())
                .map_err(|e| e.to_string())?;
            for s in solutions {
                w.serialize(&s.map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            }
            w.finish().map_err(|e| e.to_string())?;
            Ok((out, RESULTS_JSON))
        }
        QueryResults::Boolean(b) => {
            QueryResultsSerializer::from_format(QueryResultsFormat::Json)
                .serialize_boolean_to_writer(&mut out, b)
                .map_err(|e| e.to_string())?;
            Ok((out, RESULTS_JSON))
        }
        QueryResults::Graph(triples) => {
            let mut w = RdfSerializer::from_format(RdfFormat::NTriples).for_writer(&mut out);
            for t in triples {
                w.serialize_triple(&t.map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            }
            w.finish().map_err(|e| e.to_string())?;
            Ok((out, "application/n-triples"))
        }
    }
}

fn run_update(store: &Store, u: &str) -> Result<(), String> {
    SparqlEvaluator::new().parse_update(u).map_err(|e| e.to_string())?.on_store(store).execute().map_err(|e| e.to_string())
}

async fn query(State(store): State<Store>, RawQuery(raw): RawQuery, h: HeaderMap, body: Bytes) -> Response {
    let Some(q) = operation(raw, &h, &body, "query", "application/sparql-query") else {
        return bad("missing query");
    };
    match tokio::task::spawn_blocking(move || run_query(&store, &q)).await {
        Ok(Ok((bytes, ct))) => ([(header::CONTENT_TYPE, ct)], bytes).into_response(),
        Ok(Err(e)) => bad(e),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn update(State(store): State<Store>, RawQuery(raw): RawQuery, h: HeaderMap, body: Bytes) -> Response {
    let Some(u) = operation(raw, &h, &body, "update", "application/sparql-update") else {
        return bad("missing update");
    };
    match tokio::task::spawn_blocking(move || run_update(&store, &u)).await {
        Ok(Ok(())) => StatusCode::NO_CONTENT.into_response(),
        Ok(Err(e)) => bad(e),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/sparql", get(query).post(query))
        .route("/update", post(update))
        .with_state(store)
}

/// A running endpoint; dropping it leaves the server running until
/// [`Endpoint::shutdown`] is called or the runtime stops.
pub struct Endpoint {
    pub addr: SocketAddr,
    pub store: Store,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl Endpoint {
    pub fn query_url(&self) -> String {
        format!("http://{}/sparql", self.addr)
    }

    pub fn update_url(&self) -> String {
        format!("http://{}/update", self.addr)
    }

    pub async fn shutdown(mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        let _ = self.task.await;
    }
}

/// Serves `store` on `addr` (port 0 picks a free port).
pub async fn spawn(store: Store, addr: SocketAddr) -> std::io::Result<Endpoint> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(store.clone());
    let task = tokio::spawn(async move {
        let r = axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = rx.await;
            })
            .await;
        if let Err(e) = r {
            tracing::error!("sparql endpoint stopped: {e}");
        }
    });
    tracing::info!("sparql endpoint on http://{addr}/sparql");
    Ok(Endpoint { addr, store, stop: Some(tx), task })
}

/// A fresh empty store served on a free local port.
pub async fn spawn_empty() -> std::io::Result<Endpoint> {
    let store = Store::new().map_err(std::io::Error::other)?;
    spawn(store, SocketAddr::from(([127, 0, 0, 1], 0))).await
}
