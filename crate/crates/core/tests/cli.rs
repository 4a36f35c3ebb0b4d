// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn crabfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crabfactor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// File contents with the timestamp field blanked.
fn without_timestamp(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut out = String::new();
    let mut rest = text.as_str();
    while let Some(i) = rest.find("\"timestamp_unix\":") {
        let (head, tail) = rest.split_at(i);
        out.push_str(head);
        let end = tail.find(|c: char| c == ',' || c == '}').unwrap();
        rest = &tail[end..];
    }
    out.push_str(rest);
    out
}

#[test]
fn spectrum_prints_gap_and_speed_limit() {
    let o = crabfactor(&["spectrum", "--instance", "21", "--g", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Δ_min = 17.86"), "{text}");
    assert!(text.contains("T_QSL = 0.17"), "{text}");
}

#[test]
fn spectrum_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = crabfactor(&["spectrum", "--instance", "77", "--output", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {\"tool\":\"crabfactor\""));
    assert_eq!(lines.next().unwrap(), "s,E1-E0,E2-E0,E3-E0");
    let ta = without_timestamp(&a).replace("a.csv", "");
    let tb = without_timestamp(&b).replace("b.csv", "");
    assert_eq!(ta, tb);
}

#[test]
fn verify_reports_factors() {
    let o = crabfactor(&["verify", "--instance", "2479"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("a = 67, b = 37"), "{text}");
    assert!(text.contains("unique"));
}

#[test]
fn linear_sweep_matches_known_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = crabfactor(&[
        "sweep", "--instance", "21", "--method", "linear", "--t", "0.5", "--output", path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let row = text.lines().nth(2).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.3).abs() < 0.05, "{row}");
    assert!(text.lines().next().unwrap().contains("\"seed\":"));
}

#[test]
fn optimize_writes_result_and_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let o = crabfactor(&[
        "optimize", "--instance", "21", "-T", "0.5", "--restarts", "2", "--max-iterations", "30", "--steps", "200",
        "--gamma", "0.04", "--output", path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(doc["provenance"]["config"]["optimizer"]["seed"].is_u64());
    assert_eq!(doc["result"]["optimization"]["restarts"].as_array().unwrap().len(), 2);

    let trace = std::fs::read_to_string(dir.path().join("run_trace.csv")).unwrap();
    let mut last: Option<(String, f64)> = None;
    for line in trace.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        let v: f64 = cells[3].parse().unwrap();
        if let Some((r, prev)) = &last {
            if r == cells[0] {
                assert!(v <= *prev);
            }
        }
        last = Some((cells[0].to_string(), v));
    }
    // noisy runs have no pure trajectory to tabulate
    assert!(!dir.path().join("run_trajectory.csv").exists());
}

#[test]
fn same_seed_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = crabfactor(&[
            "optimize", "--instance", "77", "-T", "0.5", "--restarts", "2", "--max-iterations", "20", "--seed", "5",
            "--output", p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        without_timestamp(&p).replace(name, "")
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["optimize", "--instance", "21"][..],
        &["sweep", "--instance", "21", "--method", "bogus"],
        &["spectrum", "--instance", "22"],
        &["spectrum", "--instance", "does-not-exist.json"],
        &["optimize", "--instance", "21", "-T", "0"],
        &["frobnicate"],
    ] {
        let o = crabfactor(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unresolved_factors_exit_with_three() {
    // far too short and too few iterations to leave the uniform state
    let o = crabfactor(&[
        "factor", "2479", "-T", "0.01", "--restarts", "1", "--max-iterations", "1", "--steps", "10", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn factor_prints_the_product() {
    let o = crabfactor(&["factor", "21", "-T", "0.5", "--restarts", "1", "--max-iterations", "300", "--seed", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).trim().to_string();
    assert!(line == "21 = 3 × 7" || line == "21 = 7 × 3", "{line}");
}

#[test]
fn help_exits_cleanly() {
    let o = crabfactor(&["--help"]);
    assert!(o.status.success());
    for cmd in ["spectrum", "optimize", "sweep", "factor", "verify"] {
        assert!(stdout(&o).contains(cmd));
    }
}
