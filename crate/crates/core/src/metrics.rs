//! TPC-H style query-per-hour metrics.

use serde::{Deserialize, Serialize};

/// Queries per hour over a single sequential stream: 3600 divided by the
/// geometric mean of the per-query times in seconds.
pub fn power(query_seconds: &[f64]) -> f64 {
    if query_seconds.is_empty() {
        return 0.0;
    }
    let mean_ln = query_seconds.iter().map(|t| t.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / query_seconds.len() as f64;
    3600.0 / mean_ln.exp()
}

/// Queries per hour over the measurement interval of the concurrent pass.
pub fn throughput(queries_executed: usize, interval_seconds: f64) -> f64 {
    queries_executed as f64 * 3600.0 / interval_seconds
}

/// Geometric mean of power and throughput.
pub fn composite(power: f64, throughput: f64) -> f64 {
    (power * throughput).sqrt()
}

/// Timings and metrics of one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub label: String,
    /// Mean single-stream time per query id, in mix order.
    pub per_query: Vec<(String, f64)>,
    pub power: f64,
    pub throughput: f64,
    pub composite: f64,
    /// Wall time of the concurrent pass.
    pub interval: f64,
    pub streams: usize,
    pub queries_executed: usize,
    /// Set when some query failed; the metrics then cover what did run.
    #[serde(default)]
    pub errors: Vec<String>,
}

impl BenchReport {
    pub fn new(label: &str, per_query: Vec<(String, f64)>, streams: usize, queries_executed: usize, interval: f64) -> Self {
        let times: Vec<f64> = per_query.iter().map(|(_, t)| *t).collect();
        let p = power(&times);
        let t = throughput(queries_executed, interval);
        BenchReport {
            label: label.to_string(),
            per_query,
            power: p,
            throughput: t,
            composite: composite(p, t),
            interval,
            streams,
            queries_executed,
            errors: Vec::new(),
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!("{},{:.1},{:.1},{:.1},{:.1}", self.label, self.power, self.throughput, self.composite, self.interval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_metrics_have_that_composite() {
        assert!((composite(412.0, 412.0) - 412.0).abs() < 1e-9);
    }

    #[test]
    fn constant_times_give_their_rate() {
        assert!((power(&[2.0; 13]) - 1800.0).abs() < 1e-9);
        assert!((power(&[1.0, 4.0]) - 1800.0).abs() < 1e-9);
    }

    #[test]
    fn report_is_consistent() {
        let r = BenchReport::new("x", vec![("Q1".into(), 1.0), ("Q2".into(), 4.0)], 2, 4, 10.0);
        assert!((r.throughput - 1440.0).abs() < 1e-9);
        assert!((r.composite - (1800.0f64 * 1440.0).sqrt()).abs() < 1e-9);
    }
}
