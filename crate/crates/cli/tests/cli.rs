use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn asia() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/asia.bif")
}

fn unitree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unitree")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn query_without_evidence_gives_normalized_marginals() {
    let net = asia();
    let r = json(&unitree(&["query", "--network", net.to_str().unwrap()]));
    let post = r["posteriors"].as_object().unwrap();
    assert_eq!(post.len(), 8);
    for (_, levels) in post {
        let s: f64 = levels.as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    assert!((r["eta"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["eta"]["smoothed"], false);
}

#[test]
fn inconsistent_query_is_smoothed_and_mode_invariant() {
    let net = asia();
    let base = ["query", "--network", net.to_str().unwrap(), "--evidence", "tub=yes,either=no"];
    let up = json(&unitree(&base));
    let mut args = base.to_vec();
    args.extend(["--up", "false"]);
    let plain = json(&unitree(&args));
    assert_eq!(up["eta"]["smoothed"], true);
    for (var, levels) in up["posteriors"].as_object().unwrap() {
        for (level, p) in levels.as_object().unwrap() {
            let q = plain["posteriors"][var][level].as_f64().unwrap();
            assert!((p.as_f64().unwrap() - q).abs() <= 1e-12, "{var}={level}");
        }
    }
    assert!(up["performed"].as_u64().unwrap() < plain["performed"].as_u64().unwrap());
}

#[test]
fn exit_codes() {
    let net = asia();
    let net = net.to_str().unwrap();
    let degenerate = unitree(&["query", "--network", net, "--evidence", "tub=yes,either=no", "--policy", "laplace"]);
    assert_eq!(degenerate.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&degenerate.stderr).contains("degenerate"));
    assert_eq!(unitree(&["query", "--network", net, "--evidence", "nope=yes"]).status.code(), Some(2));
    assert_eq!(unitree(&["query", "--network", net, "--evidence", "tub=maybe"]).status.code(), Some(2));
    assert_eq!(unitree(&["query", "--network", "/no/such/file.bif"]).status.code(), Some(2));
    assert_eq!(unitree(&["query", "--bogus"]).status.code(), Some(1));
    assert_eq!(unitree(&["query"]).status.code(), Some(1));
    assert_eq!(unitree(&["--help"]).status.code(), Some(0));

    let bad = scratch("bad.bif");
    std::fs::write(&bad, "variable a { type discrete [2] {x, y}; }\nprobability (a) { table 0.2, 0.3, 0.5; }").unwrap();
    let out = unitree(&["query", "--network", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

/// Class `c` is copied into `f1`; `f2` is noise.
fn write_copy_dataset() -> (PathBuf, PathBuf) {
    let data = scratch("copy.csv");
    let dag = scratch("copy.dag");
    let mut text = String::from("c,f1,f2\n");
    for i in 0..120 {
        let c = if (i * 7) % 5 < 2 { "yes" } else { "no" };
        let f2 = if i % 3 == 0 { "u" } else { "v" };
        text.push_str(&format!("{c},{c},{f2}\n"));
    }
    text.push_str("yes,NA,u\n");
    std::fs::write(&data, text).unwrap();
    std::fs::write(&dag, "c -> f1\nc -> f2\n").unwrap();
    (dag, data)
}

#[test]
fn crossval_reports_and_is_reproducible() {
    let (dag, data) = write_copy_dataset();
    let args = [
        "crossval",
        "--dag",
        dag.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--class",
        "c",
        "--policy",
        "both",
        "--q-min",
        "1",
        "--seed",
        "3",
    ];
    let a = unitree(&args);
    let b = unitree(&args);
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["dropped_rows"], 1);
    let points = r["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    for p in points.iter().filter(|p| p["q"] == 2) {
        assert_eq!(p["error"].as_f64().unwrap(), 0.0);
    }

    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let out = unitree(&csv_args);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("policy,q,error,cases,degenerate\n"));
    assert_eq!(text.lines().count(), 5);

    let mut bad = args.to_vec();
    bad[6] = "missing";
    assert_ne!(unitree(&bad).status.code(), Some(0));
}

fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| !k.contains("time") && k != "elapsed_ns");
            m.values_mut().for_each(strip_timings);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

#[test]
fn bench_propagation_is_seeded() {
    let net = asia();
    let out = scratch("bench.json");
    let args = ["bench-propagation", "--network", net.to_str().unwrap(), "--reps", "10", "--seed", "9"];
    let mut a = json(&unitree(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(unitree(&with_out).status.code(), Some(0));
    let mut b: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    strip_timings(&mut a);
    strip_timings(&mut b);
    assert_eq!(a, b);
    let summary = a["summary"].as_array().unwrap();
    assert_eq!(summary.iter().map(|s| s["q"].as_u64().unwrap()).collect::<Vec<_>>(), [2, 4, 6]);
    for s in summary {
        assert!(s["counter_ratio"].as_f64().unwrap() <= 1.0);
    }
    let records = a["records"].as_array().unwrap();
    assert_eq!(records.len(), 3 * 10 * 2);
    for pair in records.chunks(2) {
        assert_eq!(pair[0]["evidence_digest"], pair[1]["evidence_digest"]);
    }

    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let text = String::from_utf8(unitree(&csv_args).stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 60);
    assert!(text.starts_with("q,repetition,mode,elapsed_ns,"));
}

#[test]
fn bench_network_reports_structure() {
    let net = asia();
    let r = json(&unitree(&["bench-network", "--network", net.to_str().unwrap(), "--reps", "3"]));
    assert_eq!(r["variables"], 8);
    assert_eq!(r["max_clique"], 3);
    assert!(r["unity_cliques"].as_u64().is_some());
    assert!(r["counter_ratio"].as_f64().unwrap() <= 1.0);
}
