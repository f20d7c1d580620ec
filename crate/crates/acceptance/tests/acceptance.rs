//! One line per acceptance criterion. Runs without the test harness so the
//! verdicts are always printed; exits non-zero if any criterion fails.

use cubeql_acceptance::*;
use std::time::{Duration, Instant};

/// Random programs compared across all routes (criterion 5).
const EQUIVALENCE_PROGRAMS: usize = 500;
/// Random programs for the rewrite checks (criterion 6).
const SOUNDNESS_PROGRAMS: usize = 1000;

fn main() {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    type Run = Box<dyn FnOnce() -> Verdict>;
    let criteria: Vec<(u8, &str, Duration, Run)> = vec![
        (1, "simplification fidelity", Duration::from_secs(1), Box::new(simplification_fidelity)),
        (2, "well-formedness", Duration::from_secs(1), Box::new(well_formedness)),
        (3, "translation shape", Duration::from_secs(1), Box::new(translation_shape)),
        (4, "optimizer shape", Duration::from_secs(1), Box::new(optimizer_shape)),
        (
            5,
            "oracle equivalence",
            Duration::from_secs(15 * 60),
            Box::new(move || rt.block_on(oracle_equivalence(EQUIVALENCE_PROGRAMS))),
        ),
        (6, "rewrite-rule soundness", Duration::from_secs(5 * 60), Box::new(|| rewrite_soundness(SOUNDNESS_PROGRAMS))),
        (7, "metric formulas", Duration::from_secs(1), Box::new(metric_formulas)),
        (8, "named-graph bound", Duration::from_secs(60), Box::new(named_graph_bound)),
    ];
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        let t0 = Instant::now();
        let verdict = run();
        let took = t0.elapsed();
        let verdict = match verdict {
            Ok(d) if took > budget => Err(format!("{d} (over the {budget:?} budget)")),
            v => v,
        };
        match verdict {
            Ok(d) => println!("PASS {n} {name} [{:.2}s] {d}", took.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL {n} {name} [{:.2}s] {e}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
