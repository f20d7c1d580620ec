use std::path::Path;
use std::process::{Command, Output};

fn cubeql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubeql")).args(args).output().expect("binary runs")
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn generated(dir: &Path) {
    ok(cubeql(&["generate", "--divisor", "10000", "--seed", "7", "--out-dir", dir.to_str().unwrap()]));
}

#[test]
fn generate_then_compile_from_files() {
    let dir = std::env::temp_dir().join(format!("cubeql-cli-{}", std::process::id()));
    generated(&dir);
    for f in ["schema.ttl", "instances.ttl", "config.toml", "stats.toml", "queries/Q1.cql", "queries/Q13.cql"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let q = dir.join("queries/Q7.cql");
    let schema = dir.join("schema.ttl");
    let naive = ok(cubeql(&["compile", q.to_str().unwrap(), "--schema", schema.to_str().unwrap()]));
    assert!(naive.contains("GROUP BY") && !naive.contains("VALUES"));
    let es11 = ok(cubeql(&["compile", q.to_str().unwrap(), "--schema", schema.to_str().unwrap(), "--scenario", "ES11"]));
    assert!(es11.contains("GRAPH"));
    assert_ne!(naive, es11);

    let simplified = ok(cubeql(&["simplify", q.to_str().unwrap(), "--schema", schema.to_str().unwrap()]));
    assert!(simplified.contains(":="));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = std::env::temp_dir().join(format!("cubeql-cli-bad-{}", std::process::id()));
    generated(&dir);
    let bad = dir.join("bad.cql");
    std::fs::write(&bad, "$C1:=ROLLUP(nosuchcube, x, y);").unwrap();
    let o = cubeql(&["compile", bad.to_str().unwrap(), "--schema", dir.join("schema.ttl").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());
    let o = cubeql(&["compile", bad.to_str().unwrap(), "--schema", dir.join("schema.ttl").to_str().unwrap(), "--scenario", "ES99"]);
    assert!(!o.status.success());
    std::fs::remove_dir_all(&dir).ok();
}
