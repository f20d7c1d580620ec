//! Power and throughput runs of a query mix against an endpoint.

use crate::executor::SparqlClient;
use cubeql_core::metrics::BenchReport;
use cubeql_core::sparql::parse_json_results;
use futures::future::join_all;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    /// Concurrent clients in the throughput pass.
    pub streams: usize,
    /// Untimed pass before measuring.
    pub warmup: bool,
    /// Sequential passes averaged for the per-query times.
    pub repeats: usize,
    /// Seeds each stream's query order.
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { streams: 2, warmup: true, repeats: 1, seed: 0 }
    }
}

/// Runs one query and checks the answer parses. Returns its row count.
async fn run_one(client: &SparqlClient, q: &str) -> Result<usize, String> {
    let json = client.query_json(q).await.map_err(|e| e.to_string())?;
    parse_json_results(&json).map(|r| r.rows.len()).map_err(|e| e.to_string())
}

/// Power pass (sequential, per-query times) then throughput pass (`streams`
/// clients each running the whole mix in its own shuffled order). Failed
/// queries are listed in the report's `errors` and left out of the metrics.
pub async fn run_bench(client: &SparqlClient, label: &str, mix: &[(String, String)], opts: &BenchOptions) -> BenchReport {
    let mut errors = Vec::new();
    if opts.warmup {
        for (id, q) in mix {
            if let Err(e) = run_one(client, q).await {
                errors.push(format!("{id} (warm-up): {e}"));
            }
        }
    }

    let mut per_query = Vec::new();
    for (id, q) in mix {
        let mut total = 0.0;
        let mut ok = true;
        for _ in 0..opts.repeats.max(1) {
            let t0 = Instant::now();
            if let Err(e) = run_one(client, q).await {
                errors.push(format!("{id}: {e}"));
                ok = false;
                break;
            }
            total += t0.elapsed().as_secs_f64();
        }
        if ok {
            per_query.push((id.clone(), total / opts.repeats.max(1) as f64));
        }
    }

    let streams = opts.streams.max(1);
    let t0 = Instant::now();
    let runs = (0..streams).map(|s| {
        let client = client.clone();
        let mut order: Vec<usize> = (0..mix.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(s as u64)));
        async move {
            let mut done = 0;
            let mut errs = Vec::new();
            for i in order {
                match run_one(&client, &mix[i].1).await {
                    Ok(_) => done += 1,
                    Err(e) => errs.push(format!("{} (stream {s}): {e}", mix[i].0)),
                }
            }
            (done, errs)
        }
    });
    let results = join_all(runs).await;
    let interval = t0.elapsed().as_secs_f64();
    let mut executed = 0;
    for (done, errs) in results {
        executed += done;
        errors.extend(errs);
    }
    let mut report = BenchReport::new(label, per_query, streams, executed, interval);
    report.errors = errors;
    report
}
