//! The metric formulas against a published results table: each row gives
//! power, throughput, composite and interval for 2 streams of 13 queries.

use cubeql_core::metrics::{composite, throughput};

const ROWS: &[(&str, f64, f64, f64, f64)] = &[
    ("naive", 63.8, 75.6, 69.5, 1237.6),
    ("ES1", 253.1, 293.3, 272.4, 319.2),
    ("ES2", 402.4, 361.2, 381.2, 259.1),
    ("ES3", 326.7, 353.9, 340.0, 264.5),
    ("ES6", 354.5, 108.3, 196.0, 864.2),
    ("ES14", 217.3, 148.9, 179.9, 628.7),
    ("ES15", 257.4, 198.7, 226.2, 471.0),
    ("ES16", 415.5, 254.0, 324.9, 368.4),
    ("ES7", 706.8, 561.9, 630.2, 166.6),
    ("ES17", 427.2, 368.4, 396.7, 254.1),
    ("ES18", 427.6, 339.4, 381.0, 275.8),
    ("ES19", 456.6, 379.6, 416.4, 246.6),
    ("ES4", 375.8, 215.9, 284.9, 433.4),
    ("ES8", 253.6, 171.5, 208.6, 545.7),
    ("ES9", 227.0, 146.5, 182.4, 638.8),
    ("ES10", 214.7, 148.0, 178.2, 632.6),
    ("ES5", 490.8, 418.6, 453.3, 223.6),
    ("ES11", 693.1, 750.1, 721.0, 124.8),
    ("ES12", 472.4, 368.9, 417.5, 253.7),
    ("ES13", 380.2, 327.2, 352.7, 286.1),
    ("ssb-qb", 69.9, 17.2, 34.7, 5447.0),
];

const QUERIES: usize = 26;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn throughput_matches_every_row() {
    for (name, _, t, _, interval) in ROWS {
        let got = throughput(QUERIES, *interval);
        assert!(rel(got, *t) < 0.005, "{name}: {got} vs {t}");
    }
}

#[test]
fn composite_matches_every_row() {
    for (name, p, t, c, _) in ROWS {
        let got = composite(*p, *t);
        assert!(rel(got, *c) < 0.005, "{name}: {got} vs {c}");
    }
}

#[test]
fn best_row_spot_values() {
    assert!((throughput(26, 124.8) - 750.0).abs() < 1e-9);
    assert!((composite(693.1, 750.1) - 721.0).abs() <= 0.1);
    assert!((composite(63.8, 75.6) - 69.5).abs() <= 0.1);
}
