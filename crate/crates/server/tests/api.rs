//! The HTTP API over an in-process SPARQL endpoint holding the asylum cube.

use cubeql_client::cube::load_cube;
use cubeql_client::SparqlClient;
use cubeql_core::config::Config;
use cubeql_core::cql::parse;
use cubeql_core::fixtures::*;
use cubeql_core::oracle::eval;
use cubeql_core::pipeline::check;
use cubeql_core::simplify::simplify;
use cubeql_core::table::Value as Cell;
use cubeql_memstore::{spawn_empty, Endpoint};
use cubeql_server::{app, AppState};
use serde_json::{json, Value};
use std::net::SocketAddr;

struct Api {
    base: String,
    http: reqwest::Client,
    _ep: Option<Endpoint>,
}

impl Api {
    async fn start(config: Option<Config>, ep: Option<Endpoint>, origins: Option<Vec<String>>) -> Api {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let router = app(AppState::new(config), origins);
        tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
        Api { base, http: reqwest::Client::new(), _ep: ep }
    }

    async fn asylum() -> Api {
        let ep = spawn_empty().await.unwrap();
        let mut cfg = asylum_config(&ep.query_url());
        cfg.update_endpoint = Some(ep.update_url());
        load_cube(&SparqlClient::from_config(&cfg), &cfg.graphs, &asylum_cube(true)).await.unwrap();
        Api::start(Some(cfg), Some(ep), None).await
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn post(&self, path: &str, body: &str) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn schema_lists_the_cube() {
    let api = Api::asylum().await;
    let (status, v) = api.get("/schema").await;
    assert_eq!(status, 200);
    assert_eq!(v["dimensions"].as_array().unwrap().len(), 6);
    let m = &v["measures"][0];
    assert_eq!(m["name"], "obsValue");
    assert_eq!(m["aggregate"], "Sum");
    let cit = v["dimensions"].as_array().unwrap().iter().find(|d| d["name"] == "citDim").unwrap();
    assert_eq!(cit["hierarchies"].as_array().unwrap().len(), 2);
    assert_eq!(api.get("/schema").await.1, v);
}

#[tokio::test(flavor = "multi_thread")]
async fn unconfigured_service_says_so() {
    let api = Api::start(None, None, None).await;
    for (status, v) in [
        api.get("/schema").await,
        api.get("/members?dimension=citDim&level=continent").await,
        api.post("/compile", r#"{"cql":"$C1:=SLICE(migr_asyapp,sexDim);"}"#).await,
        api.post("/execute", r#"{"sparql":"ASK {}"}"#).await,
    ] {
        assert_eq!(status, 409);
        assert_eq!(v["error"]["code"], "NOT_CONFIGURED");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn members_by_level() {
    let api = Api::asylum().await;
    let (status, v) = api.get("/members?dimension=citizenshipDim&level=continent").await;
    assert_eq!(status, 200);
    assert_eq!(v["total"], 3);
    let asia = v["members"].as_array().unwrap().iter().find(|m| m["iri"].as_str().unwrap().ends_with("citizen#AS")).unwrap();
    assert_eq!(asia["attributes"]["contName"], "Asia");

    let (_, p0) = api.get("/members?dimension=citDim&level=citizen&page_size=2").await;
    let (_, p1) = api.get("/members?dimension=citDim&level=citizen&page_size=2&page=1").await;
    let (_, p9) = api.get("/members?dimension=citDim&level=citizen&page_size=2&page=9").await;
    assert_eq!(p0["members"].as_array().unwrap().len(), 2);
    assert!(p0["members"][1]["iri"].as_str() < p1["members"][0]["iri"].as_str());
    assert_eq!(p9["members"], json!([]));
    assert_eq!(p9["total"], 5);

    let (status, v) = api.get("/members?dimension=citDim&level=planet").await;
    assert_eq!(status, 404);
    assert_eq!(v["error"]["code"], "UNKNOWN_NAME");
    assert_eq!(api.get("/members?dimension=nope&level=year").await.0, 404);
}

#[tokio::test(flavor = "multi_thread")]
async fn compile_simplifies_and_reports() {
    let api = Api::asylum().await;
    let body = json!({ "cql": QUERY_REDUNDANT_NAVIGATION, "scenario": "ES7" }).to_string();
    let (status, v) = api.post("/compile", &body).await;
    assert_eq!(status, 200, "{v}");
    let simplified = parse(v["simplified_cql"].as_str().unwrap()).unwrap();
    assert_eq!(simplified.statements.len(), 2, "{}", v["simplified_cql"]);
    assert!(!v["rewrite_trace"].as_array().unwrap().is_empty());
    assert!(v["naive_sparql"].as_str().unwrap().starts_with("PREFIX") || v["naive_sparql"].as_str().unwrap().contains("SELECT"));
    assert!(v["improved_sparql"].is_string());
    assert_eq!(v["diagnostics"]["well_formed"], true);

    let (status, v) = api.post("/compile", &json!({ "cql": QUERY_DICE_BETWEEN_NAVIGATION }).to_string()).await;
    assert_eq!(status, 422);
    assert_eq!(v["error"]["code"], "NOT_WELL_FORMED(iii)");
    assert_eq!(v["diagnostics"][0]["statement"], 1);
    assert_eq!(v["diagnostics"][0]["line"], 3);

    assert_eq!(api.post("/compile", "").await.0, 400);
    assert_eq!(api.post("/compile", "{not json").await.0, 400);
    let (status, v) = api.post("/compile", &json!({ "cql": QUERY_ASIA_OVER_5000, "scenario": "ES99" }).to_string()).await;
    assert_eq!(status, 400);
    assert_eq!(v["error"]["code"], "INVALID_ARGUMENT");
    let (status, v) = api.post("/compile", r#"{"cql":"$C1:=SLICE(migr_asyapp,nowhereDim);"}"#).await;
    assert_eq!(status, 422);
    assert!(v["diagnostics"][0]["code"].is_string());
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Iri(s) | Cell::Literal(s) => json!(s),
        Cell::Number(n) => json!(n),
        Cell::Null => Value::Null,
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn execute_matches_the_oracle() {
    let api = Api::asylum().await;
    let cube = asylum_cube(true);
    let (tp, _) = check(QUERY_ASIA_OVER_5000, &cube.schema).unwrap();
    let expected = eval(&simplify(&tp, &cube.schema).unwrap().program, &cube).unwrap().canonical();

    let mut seen = Vec::new();
    for scenario in ["naive", "ES7", "ES11"] {
        let (status, v) = api.post("/execute", &json!({ "cql": QUERY_ASIA_OVER_5000, "scenario": scenario }).to_string()).await;
        assert_eq!(status, 200, "{v}");
        assert_eq!(v["columns"].as_array().unwrap().len(), expected.columns.len());
        let mut rows: Vec<String> = v["rows"].as_array().unwrap().iter().map(|r| r.to_string()).collect();
        rows.sort();
        let mut want: Vec<String> =
            expected.rows.iter().map(|r| Value::Array(r.iter().map(cell_json).collect()).to_string()).collect();
        want.sort();
        assert_eq!(rows, want, "{scenario}");
        assert!(v["timing_ms"].as_f64().unwrap() >= 0.0);
        seen.push(v["executed_sparql"].as_str().unwrap().to_string());
    }
    assert_ne!(seen[0], seen[2], "ES11 should change the query text");

    let (status, v) = api.post("/execute", r#"{"sparql":"SELECT ?x WHERE { ?x ?y }"}"#).await;
    assert_eq!(status, 502);
    assert_eq!(v["error"]["code"], "ENDPOINT_ERROR");
    let (status, v) = api.post("/execute", r#"{"sparql":"SELECT (1 AS ?one) WHERE {}"}"#).await;
    assert_eq!(status, 200);
    assert_eq!(v["rows"][0][0], 1.0);
    assert_eq!(api.post("/execute", "{}").await.0, 400);
}

#[tokio::test(flavor = "multi_thread")]
async fn cors_headers() {
    let api = Api::start(None, None, Some(vec!["http://localhost:5173".into()])).await;
    let r = api.http.get(format!("{}/schema", api.base)).header("origin", "http://localhost:5173").send().await.unwrap();
    assert_eq!(r.headers()["access-control-allow-origin"], "http://localhost:5173");
    let r = api.http.get(format!("{}/schema", api.base)).header("origin", "http://evil.example").send().await.unwrap();
    assert!(r.headers().get("access-control-allow-origin").is_none());
    let r = api
        .http
        .request(reqwest::Method::OPTIONS, format!("{}/compile", api.base))
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .send()
        .await
        .unwrap();
    assert!(r.status().is_success());
    assert!(r.headers().contains_key("access-control-allow-methods"));

    let any = Api::start(None, None, None).await;
    let r = any.http.get(format!("{}/schema", any.base)).header("origin", "http://x.example").send().await.unwrap();
    assert_eq!(r.headers()["access-control-allow-origin"], "*");
}
