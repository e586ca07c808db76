#![cfg(feature = "cli")]

use std::path::Path;
use std::process::{Command, Output};

fn acpath(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acpath"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn trace_query_validate_export_render() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = acpath(d, &["generate", "--n-plus", "6", "--n-minus", "6", "--seed", "4", "-o", "data.txt"]);
    assert_eq!(code(&gen), 0);
    let text = std::fs::read_to_string(d.join("data.txt")).unwrap();
    assert_eq!(text.lines().count(), 12);

    let trace = acpath(d, &["trace", "data.txt", "-o", "path.json"]);
    assert_eq!(code(&trace), 0, "{}", String::from_utf8_lossy(&trace.stderr));
    let doc = acpath::io::import_json(&std::fs::read_to_string(d.join("path.json")).unwrap()).unwrap();
    assert_eq!(doc.graph.n, 12);

    let q = acpath(d, &["query", "data.txt", "--path", "path.json", "--at", "0.3,0.7", "--x", "0.5,-1"]);
    assert_eq!(code(&q), 0);
    let v: serde_json::Value = serde_json::from_slice(&q.stdout).unwrap();
    assert_eq!(v["model"]["beta"].as_array().unwrap().len(), 3);
    assert!(v["label"] == 1 || v["label"] == -1);

    let val = acpath(d, &["validate", "data.txt", "--path", "path.json", "--samples", "40"]);
    assert_eq!(code(&val), 0, "{}", String::from_utf8_lossy(&val.stdout));
    assert!(String::from_utf8_lossy(&val.stdout).contains("oracle_equivalence"));

    let csv = acpath(d, &["export", "data.txt", "--path", "path.json", "--format", "csv"]);
    assert_eq!(code(&csv), 0);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("sample,t,polyline,seq,c_plus,c_minus\n"));

    let svg = acpath(d, &["render", "data.txt", "--path", "path.json", "--events", "0,3", "-o", "p.svg"]);
    assert_eq!(code(&svg), 0);
    let svg = std::fs::read_to_string(d.join("p.svg")).unwrap();
    assert!(svg.contains("<polygon"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.txt"), "+1 1:2\n-1 2:1 1:3\n").unwrap();
    let bad = acpath(d, &["trace", "bad.txt"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2, column 8"));
    assert_eq!(code(&acpath(d, &["trace", "missing.txt"])), 2);
    std::fs::write(d.join("one.txt"), "+1 1:2\n+1 1:1\n").unwrap();
    assert_eq!(code(&acpath(d, &["trace", "one.txt"])), 2);

    assert_eq!(code(&acpath(d, &["generate", "--seed", "1", "-o", "data.txt"])), 0);
    assert_eq!(code(&acpath(d, &["trace", "data.txt", "--max-layers", "2"])), 3);
    assert_eq!(code(&acpath(d, &["trace", "data.txt", "--init", "bogus"])), 2);

    // a broken facet link fails validation
    assert_eq!(code(&acpath(d, &["trace", "data.txt", "-o", "path.json"])), 0);
    let mut doc = acpath::io::import_json(&std::fs::read_to_string(d.join("path.json")).unwrap()).unwrap();
    let e = doc.graph.edges.iter().position(|e| e.facets.len() == 2).unwrap();
    doc.graph.edges[e].facets.pop();
    std::fs::write(d.join("broken.json"), acpath::io::export_json(&doc.graph, None).unwrap()).unwrap();
    let v = acpath(d, &["validate", "data.txt", "--path", "broken.json", "--samples", "10"]);
    assert_eq!(code(&v), 1);
    assert!(String::from_utf8_lossy(&v.stdout).contains("integrity            FAIL"));
}

#[test]
fn seeded_trace_from_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&acpath(d, &["generate", "--seed", "2", "-o", "data.txt"])), 0);
    let t = acpath(d, &["trace", "data.txt", "--init", "point:0.2,0.3", "-o", "p.json"]);
    assert_eq!(code(&t), 0, "{}", String::from_utf8_lossy(&t.stderr));
}
