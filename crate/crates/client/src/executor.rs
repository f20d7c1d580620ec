use cubeql_core::config::Config;
use cubeql_core::sparql::{render, table_from_json, ResultsError, SparqlQueryIr};
use cubeql_core::table::ResultTable;
use reqwest::StatusCode;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("ENDPOINT_UNREACHABLE: {0}")]
    Unreachable(String),
    #[error("TIMEOUT after {0:?}")]
    Timeout(Duration),
    #[error("ENDPOINT_ERROR {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error(transparent)]
    Results(#[from] ResultsError),
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            ExecError::Unreachable(_) => "ENDPOINT_UNREACHABLE",
            ExecError::Timeout(_) => "TIMEOUT",
            ExecError::Endpoint { .. } => "ENDPOINT_ERROR",
            ExecError::Results(_) => "MALFORMED_RESULTS",
        }
    }
}

/// A SPARQL 1.1 protocol client. Queries are POSTed form-encoded, updates
/// likewise to the update endpoint. Cloning shares the connection pool.
#[derive(Debug, Clone)]
pub struct SparqlClient {
    http: reqwest::Client,
    pub query_url: String,
    pub update_url: String,
    pub timeout: Option<Duration>,
}

impl SparqlClient {
    pub fn new(query_url: &str, update_url: Option<&str>) -> Self {
        SparqlClient {
            http: reqwest::Client::new(),
            query_url: query_url.to_string(),
            update_url: update_url.unwrap_or(query_url).to_string(),
            timeout: None,
        }
    }

    pub fn from_config(c: &Config) -> Self {
        let mut client = SparqlClient::new(&c.endpoint, c.update_endpoint.as_deref());
        client.timeout = c.timeout_secs.map(Duration::from_secs);
        client
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }

    async fn post(&self, url: &str, field: &str, text: &str, accept: &str) -> Result<String, ExecError> {
        let mut req = self.http.post(url).header(reqwest::header::ACCEPT, accept).form(&[(field, text)]);
        if let Some(t) = self.timeout {
            req = req.timeout(t);
        }
        let resp = req.send().await.map_err(|e| self.transport(e))?;
        let status = resp.status();
        let body = resp.text().await.map_err(|e| self.transport(e))?;
        if status != StatusCode::OK && status != StatusCode::NO_CONTENT {
            return Err(ExecError::Endpoint { status: status.as_u16(), body });
        }
        Ok(body)
    }

    fn transport(&self, e: reqwest::Error) -> ExecError {
        if e.is_timeout() {
            ExecError::Timeout(self.timeout.unwrap_or_default())
        } else {
            ExecError::Unreachable(e.to_string())
        }
    }

    /// Raw JSON results of a SELECT or ASK query.
    pub async fn query_json(&self, q: &str) -> Result<String, ExecError> {
        self.post(&self.query_url, "query", q, "application/sparql-results+json").await
    }

    pub async fn update(&self, u: &str) -> Result<(), ExecError> {
        self.post(&self.update_url, "update", u, "*/*").await.map(|_| ())
    }

    /// Runs a generated query and names its columns.
    pub async fn execute(&self, ir: &SparqlQueryIr) -> Result<ResultTable, ExecError> {
        let json = self.query_json(&render(ir)).await?;
        Ok(table_from_json(&json, Some(ir))?)
    }

    /// Runs arbitrary SELECT text; columns are the variables.
    pub async fn select(&self, q: &str) -> Result<ResultTable, ExecError> {
        let json = self.query_json(q).await?;
        Ok(table_from_json(&json, None)?)
    }
}
