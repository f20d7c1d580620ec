use super::SparqlQueryIr;
use crate::rdf::{is_numeric_xsd, Graph, Literal, Term, Triple, XSD};
use crate::table::{Column, ColumnKind, ResultTable, Value};
use serde_json::Value as Json;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResultsError {
    #[error("MALFORMED_RESULTS: {0}")]
    Malformed(String),
}

/// Variables and rows of a SELECT result, in the order sent.
#[derive(Debug, Clone, PartialEq)]
pub struct SparqlResults {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

fn malformed(m: impl Into<String>) -> ResultsError {
    ResultsError::Malformed(m.into())
}

fn binding_value(b: &Json) -> Result<Value, ResultsError> {
    let kind = b.get("type").and_then(Json::as_str).ok_or_else(|| malformed("binding without type"))?;
    let value = b.get("value").and_then(Json::as_str).ok_or_else(|| malformed("binding without value"))?;
    Ok(match kind {
        "uri" => Value::Iri(value.to_string()),
        "bnode" => Value::Literal(format!("_:{value}")),
        "literal" | "typed-literal" => {
            let numeric = b
                .get("datatype")
                .and_then(Json::as_str)
                .and_then(|dt| dt.strip_prefix(XSD))
                .is_some_and(is_numeric_xsd);
            match (numeric, value.trim().parse::<f64>()) {
                (true, Ok(n)) => Value::Number(n),
                (true, Err(_)) => return Err(malformed(format!("numeric literal {value:?} does not parse"))),
                _ => Value::Literal(value.to_string()),
            }
        }
        other => return Err(malformed(format!("unknown binding type {other}"))),
    })
}

/// Parses the SPARQL 1.1 JSON results format.
pub fn parse_json_results(text: &str) -> Result<SparqlResults, ResultsError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let vars: Vec<String> = doc
        .pointer("/head/vars")
        .and_then(Json::as_array)
        .ok_or_else(|| malformed("missing head.vars"))?
        .iter()
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| malformed("non-string variable")))
        .collect::<Result<_, _>>()?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Json::as_array)
        .ok_or_else(|| malformed("missing results.bindings"))?;
    let mut rows = Vec::with_capacity(bindings.len());
    for b in bindings {
        let obj = b.as_object().ok_or_else(|| malformed("binding row is not an object"))?;
        let mut row = Vec::with_capacity(vars.len());
        for v in &vars {
            row.push(match obj.get(v) {
                Some(x) => binding_value(x)?,
                None => Value::Null,
            });
        }
        rows.push(row);
    }
    Ok(SparqlResults { vars, rows })
}

/// Builds a named result table: with the query's column map when given,
/// otherwise one literal-valued column per variable.
pub fn table_from_json(text: &str, ir: Option<&SparqlQueryIr>) -> Result<ResultTable, ResultsError> {
    let r = parse_json_results(text)?;
    let Some(ir) = ir else {
        let columns = r
            .vars
            .iter()
            .map(|v| Column { name: v.clone(), kind: ColumnKind::Member })
            .collect();
        return Ok(ResultTable { columns, rows: r.rows });
    };
    let mut idx = Vec::new();
    for c in &ir.columns {
        idx.push(r.vars.iter().position(|v| *v == c.var).ok_or_else(|| malformed(format!("variable ?{} missing", c.var)))?);
    }
    Ok(ResultTable {
        columns: ir.columns.iter().map(|c| c.column.clone()).collect(),
        rows: r.rows.into_iter().map(|row| idx.iter().map(|i| row[*i].clone()).collect()).collect(),
    })
}

fn binding_term(b: &Json) -> Result<Term, ResultsError> {
    let kind = b.get("type").and_then(Json::as_str).ok_or_else(|| malformed("binding without type"))?;
    let value = b.get("value").and_then(Json::as_str).ok_or_else(|| malformed("binding without value"))?.to_string();
    Ok(match kind {
        "uri" => Term::Iri(value),
        "bnode" => Term::Blank(value),
        "literal" | "typed-literal" => Term::Literal(Literal {
            lexical: value,
            datatype: b.get("datatype").and_then(Json::as_str).map(str::to_string),
            lang: b.get("xml:lang").and_then(Json::as_str).map(str::to_string),
        }),
        other => return Err(malformed(format!("unknown binding type {other}"))),
    })
}

/// Rebuilds a graph from a `SELECT ?s ?p ?o` result. Rows are sorted first
/// so the graph does not depend on the order the endpoint sent them in.
pub fn graph_from_json(text: &str) -> Result<Graph, ResultsError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let bindings = doc
        .pointer("/results/bindings")
        .and_then(Json::as_array)
        .ok_or_else(|| malformed("missing results.bindings"))?;
    let mut triples = Vec::with_capacity(bindings.len());
    for b in bindings {
        let get = |v: &str| b.get(v).ok_or_else(|| malformed(format!("row without ?{v}"))).and_then(binding_term);
        let Term::Iri(p) = get("p")? else { return Err(malformed("non-IRI predicate")) };
        triples.push(Triple { s: get("s")?, p, o: get("o")? });
    }
    triples.sort();
    triples.dedup();
    let mut g = Graph::new();
    for t in triples {
        g.insert(t);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bindings() {
        let text = r#"{"head":{"vars":["x","y"]},"results":{"bindings":[
            {"x":{"type":"uri","value":"http://a"},"y":{"type":"literal","value":"2.5","datatype":"http://www.w3.org/2001/XMLSchema#decimal"}},
            {"x":{"type":"literal","value":"hi","xml:lang":"en"}}]}}"#;
        let r = parse_json_results(text).unwrap();
        assert_eq!(r.vars, ["x", "y"]);
        assert_eq!(r.rows[0], vec![Value::Iri("http://a".into()), Value::Number(2.5)]);
        assert_eq!(r.rows[1], vec![Value::Literal("hi".into()), Value::Null]);
    }

    #[test]
    fn rebuilds_graph() {
        let text = r#"{"head":{"vars":["s","p","o"]},"results":{"bindings":[
            {"s":{"type":"bnode","value":"b0"},"p":{"type":"uri","value":"http://p"},"o":{"type":"literal","value":"x","xml:lang":"en"}},
            {"s":{"type":"uri","value":"http://a"},"p":{"type":"uri","value":"http://p"},"o":{"type":"literal","value":"3","datatype":"http://www.w3.org/2001/XMLSchema#integer"}}]}}"#;
        let g = graph_from_json(text).unwrap();
        assert_eq!(g.len(), 2);
        let o = g.object(&Term::iri("http://a"), "http://p").unwrap();
        assert_eq!(o.as_literal().unwrap().as_f64(), Some(3.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_json_results("{}").is_err());
        assert!(parse_json_results("not json").is_err());
        assert!(parse_json_results(r#"{"head":{"vars":["x"]},"results":{"bindings":[{"x":{"value":"1"}}]}}"#).is_err());
    }
}
