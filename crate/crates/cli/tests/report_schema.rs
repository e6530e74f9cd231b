//! Pins the benchmark report schema: a fresh run on fixed seeds must match
//! the committed golden file exactly once timing fields are removed. Any
//! field rename, numeric drift, or ordering change shows up as a diff here.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timing");
            for (_, val) in map.iter_mut() {
                strip_timing(val);
            }
        }
        Value::Array(items) => {
            for it in items {
                strip_timing(it);
            }
        }
        _ => {}
    }
}

#[test]
fn bench_report_matches_golden_file() {
    let out = Command::new(env!("CARGO_BIN_EXE_btkkt"))
        .args([
            "bench",
            "--preset",
            "scopf-like",
            "--scale",
            "tiny",
            "--seeds",
            "2",
            "--reps",
            "3",
            "--json",
        ])
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "bench failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut got: Value = serde_json::from_slice(&out.stdout).unwrap();
    strip_timing(&mut got);

    let golden_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/bench_scopf_tiny.json");
    let golden_text = std::fs::read_to_string(&golden_path).unwrap();
    let mut golden: Value = serde_json::from_str(&golden_text).unwrap();
    strip_timing(&mut golden);

    if got != golden {
        // Locate the first divergence to keep the failure readable.
        fn first_diff(a: &Value, b: &Value, path: String) -> Option<String> {
            match (a, b) {
                (Value::Object(ma), Value::Object(mb)) => {
                    for key in ma.keys().chain(mb.keys()) {
                        match (ma.get(key), mb.get(key)) {
                            (Some(va), Some(vb)) => {
                                if let Some(d) = first_diff(va, vb, format!("{path}.{key}")) {
                                    return Some(d);
                                }
                            }
                            _ => return Some(format!("{path}.{key}: present on one side only")),
                        }
                    }
                    None
                }
                (Value::Array(aa), Value::Array(ab)) => {
                    if aa.len() != ab.len() {
                        return Some(format!("{path}: lengths {} vs {}", aa.len(), ab.len()));
                    }
                    for (i, (va, vb)) in aa.iter().zip(ab).enumerate() {
                        if let Some(d) = first_diff(va, vb, format!("{path}[{i}]")) {
                            return Some(d);
                        }
                    }
                    None
                }
                _ => {
                    if a != b {
                        Some(format!("{path}: {a} vs {b}"))
                    } else {
                        None
                    }
                }
            }
        }
        let diff = first_diff(&got, &golden, "$".into())
            .unwrap_or_else(|| "values differ but no path found".into());
        panic!("bench report diverged from golden file at {diff}");
    }
}
