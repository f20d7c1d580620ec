use cubeql_memstore::{load_turtle, spawn_empty};
use serde_json::Value;

#[tokio::test]
async fn select_update_and_errors() {
    let ep = spawn_empty().await.unwrap();
    let http = reqwest::Client::new();

    let r = http
        .post(ep.update_url())
        .header("content-type", "application/sparql-update")
        .body("INSERT DATA { GRAPH <http://g> { <http://a> <http://p> 1 , 2 } }")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 204);

    let q = "SELECT (SUM(?o) AS ?t) FROM NAMED <http://g> WHERE { GRAPH <http://g> { ?s ?p ?o } }";
    let r = http.get(ep.query_url()).query(&[("query", q)]).send().await.unwrap();
    assert_eq!(r.headers()["content-type"], "application/sparql-results+json");
    let v: Value = r.json().await.unwrap();
    assert_eq!(v["results"]["bindings"][0]["t"]["value"], "3");

    // Form-encoded POST.
    let r = http.post(ep.query_url()).form(&[("query", "ASK { GRAPH ?g { ?s ?p 2 } }")]).send().await.unwrap();
    let v: Value = r.json().await.unwrap();
    assert_eq!(v["boolean"], true);

    let r = http.get(ep.query_url()).query(&[("query", "SELEC nonsense")]).send().await.unwrap();
    assert_eq!(r.status(), 400);
    let r = http.post(ep.query_url()).body("x").send().await.unwrap();
    assert_eq!(r.status(), 400);
    ep.shutdown().await;
}

#[tokio::test]
async fn direct_turtle_load_goes_to_its_graph() {
    let ep = spawn_empty().await.unwrap();
    load_turtle(&ep.store, Some("http://g2"), "<http://x> <http://y> \"z\" .").unwrap();
    let http = reqwest::Client::new();
    let r = http
        .post(ep.query_url())
        .header("content-type", "application/sparql-query")
        .body("SELECT ?g WHERE { GRAPH ?g { ?s ?p ?o } }")
        .send()
        .await
        .unwrap();
    let v: Value = r.json().await.unwrap();
    assert_eq!(v["results"]["bindings"][0]["g"]["value"], "http://g2");
    assert!(load_turtle(&ep.store, None, "not turtle").is_err());
}
