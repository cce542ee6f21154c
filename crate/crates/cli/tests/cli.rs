use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn railstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_railstream"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn query_reproduces_golden_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q7.jsonl");
    let o = railstream(&[
        "query",
        "q7",
        "--input",
        path(&fixture("telemetry.csv")),
        "--fences",
        path(&fixture("fences.geojson")),
        "--weather",
        path(&fixture("weather.csv")),
        "--config",
        path(&fixture("config.toml")),
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixture("golden/q7.jsonl")).unwrap()
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("alerts to"));
}

#[test]
fn query_over_simulated_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q8.jsonl");
    let o = railstream(&[
        "query",
        "q8",
        "--scenario",
        path(&fixture("scenario.toml")),
        "--fences",
        path(&fixture("fences.geojson")),
        "--config",
        path(&fixture("config.toml")),
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.matches("\"brake_pattern\"").count(), 1);
}

#[test]
fn unknown_query_is_a_usage_error() {
    let o = railstream(&["query", "q9", "--input", "x.csv", "--fences", "f", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = railstream(&[
        "query",
        "q1",
        "--input",
        path(&dir.path().join("absent.csv")),
        "--fences",
        path(&fixture("fences.geojson")),
        "--out",
        path(&dir.path().join("out.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn bench_prints_one_json_report() {
    let o = railstream(&["bench", "q6", "--events", "1000", "--seed", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "alerts_out",
            "bytes_processed",
            "dropped_stale",
            "events_per_second",
            "events_processed",
            "megabytes_per_second",
            "query_id",
            "wall_time_ms",
        ]
    );
    assert_eq!(v["query_id"], "q6");
    assert_eq!(v["events_processed"], 1000);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = railstream(&["simulate", "--scenario", path(&fixture("scenario.toml")), "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(a).unwrap();
    assert_eq!(a, std::fs::read(b).unwrap());
    assert_eq!(a, std::fs::read(fixture("telemetry.csv")).unwrap());
}

#[test]
fn export_geojson_writes_feature_collection() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q8.geojson");
    let o = railstream(&["export-geojson", "--in", path(&fixture("golden/q8.jsonl")), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["type"], "FeatureCollection");
    assert_eq!(v["features"].as_array().unwrap().len(), 2);
}
