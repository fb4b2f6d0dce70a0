use std::fs;
use std::path::Path;
use std::process::Command;

use relosc::cli::run;
use serde_json::Value;

fn relosc(args: &[&str]) -> i32 {
    run(std::iter::once("relosc").chain(args.iter().copied()))
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_flags_i2_on_example_33() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(relosc(&["check", "--preset", "example-3.3", "--out", &out]), 1);
    let doc = read_json(&dir.path().join("check.json"));
    let verdicts = doc["result"]["verdicts"].as_array().unwrap();
    let i2 = verdicts.iter().find(|v| v["hypothesis"] == "i2").unwrap();
    assert_eq!(i2["status"], "falsified");
    assert!(i2["witness"].is_object());
    assert_eq!(doc["config"]["seed"], 0);
}

#[test]
fn check_passes_on_two_minima() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(relosc(&["check", "--preset", "two-minima-symmetric", "--out", &out_arg(dir.path())]), 0);
}

#[test]
fn find_two_writes_pair_and_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(relosc(&["find-two", "--preset", "two-minima-symmetric", "--out", &out, "--seed", "7"]), 0);
    for f in ["find_two.json", "scan.csv", "minimum_a.csv", "minimum_b.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let doc = read_json(&dir.path().join("find_two.json"));
    assert_eq!(doc["result"]["outcome"], "found");
    assert_eq!(doc["config"]["seed"], 7);
    for c in doc["result"]["detail"]["certificates"].as_array().unwrap() {
        assert_eq!(c["passed"], true);
    }
    let csv = fs::read_to_string(dir.path().join("minimum_a.csv")).unwrap();
    assert!(csv.starts_with("# config: {"));
    assert!(csv.contains("\"seed\":7"));

    let lambda = doc["result"]["detail"]["lambda"].as_f64().unwrap().to_string();
    let vdir = tempfile::tempdir().unwrap();
    let path = dir.path().join("minimum_a.csv").display().to_string();
    let code = relosc(&[
        "verify", "--preset", "two-minima-symmetric", "--lambda", &lambda, "--path", &path, "--out", &out_arg(vdir.path()),
    ]);
    assert_eq!(code, 0);
    let cert = read_json(&vdir.path().join("certificate.json"));
    assert_eq!(cert["result"]["certificate"]["passed"], true);
    assert!(vdir.path().join("residual.csv").is_file());

    let rdir = tempfile::tempdir().unwrap();
    assert_eq!(relosc(&["report", "--from", &out, "--out", &out_arg(rdir.path())]), 0);
    let svg = fs::read_to_string(rdir.path().join("energy_vs_lambda.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("class=\"series\""));
    let paths = fs::read_to_string(rdir.path().join("paths.svg")).unwrap();
    assert_eq!(paths.matches("<polyline").count(), 2);
    assert_eq!(relosc(&["report", "--from", &out_arg(vdir.path()), "--out", &out_arg(rdir.path())]), 0);
    let hist = fs::read_to_string(rdir.path().join("residual_histogram.svg")).unwrap();
    assert!(hist.contains("class=\"bar\""));
}

#[test]
fn verify_rejects_a_non_stationary_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.csv");
    fs::write(&file, "t,u_1\n0,0.1\n0.25,0.3\n0.5,0.2\n0.75,0.0\n").unwrap();
    let out = dir.path().join("out");
    let code = relosc(&[
        "verify", "--preset", "two-minima-symmetric", "--lambda", "1", "--path", &file.display().to_string(),
        "--out", &out_arg(&out),
    ]);
    assert_eq!(code, 1);
    assert_eq!(read_json(&out.join("certificate.json"))["result"]["certificate"]["passed"], false);
}

#[test]
fn usage_errors_exit_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = out_arg(&out);
    let missing = dir.path().join("missing.json").display().to_string();
    assert_eq!(relosc(&["minimize", "--instance", &missing, "--lambda", "1", "--out", &o]), 2);
    assert_eq!(relosc(&["minimize", "--preset", "two-minima-symmetric", "--out", &o]), 2);
    assert_eq!(relosc(&["scan", "--preset", "nope", "--out", &o]), 2);
    assert_eq!(relosc(&["scan", "--preset", "example-3.1", "--lambda-grid", "1:2", "--out", &o]), 2);
    assert_eq!(relosc(&["minimize", "--preset", "example-3.1", "--lambda", "1", "--grid-n", "2", "--out", &o]), 2);
    assert_eq!(relosc(&["bogus-subcommand"]), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"dim\": 1,\n  oops\n}\n").unwrap();
    assert_eq!(relosc(&["check", "--instance", &bad.display().to_string(), "--out", &o]), 2);
    assert!(!out.exists());
    assert_eq!(relosc(&["--help"]), 0);
}

#[test]
fn binary_reports_line_numbers_for_malformed_instances() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"dim\": 1,\n  oops\n}\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_relosc"))
        .args(["check", "--instance", &bad.display().to_string(), "--out", &out_arg(&dir.path().join("o"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn minimize_with_trace_and_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inst.json");
    let inst = relosc::model::preset("example-3.1", &Default::default()).unwrap();
    let text = serde_json::to_string_pretty(&serde_json::json!({ "preset": "example-3.1" })).unwrap();
    fs::write(&file, text).unwrap();
    let out = dir.path().join("o");
    let code = relosc(&[
        "minimize", "--instance", &file.display().to_string(), "--lambda", "0.5", "--starts", "4", "--trace", "--threads", "2",
        "--out", &out_arg(&out),
    ]);
    assert_eq!(code, 0);
    let doc = read_json(&out.join("minimum.json"));
    assert_eq!(doc["result"]["minimum"]["converged"], true);
    assert_eq!(doc["config"]["instance"]["name"], inst.name);
    let p = relosc::path::PeriodicPath::load_csv(&out.join("minimum.csv")).unwrap();
    assert!(p.nodes().iter().all(|u| (u + 0.5).abs() < 1e-6));
    assert!(fs::read_to_string(out.join("trace.jsonl")).unwrap().lines().count() > 0);
}

#[test]
fn shoot_and_wellposed_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert_eq!(relosc(&["shoot", "--preset", "example-3.2", "--lambda", "1", "--out", &out_arg(&out)]), 0);
    let doc = read_json(&out.join("shoot.json"));
    assert_eq!(doc["result"]["roots"].as_array().unwrap().len(), 1);

    let w = dir.path().join("w");
    assert_eq!(relosc(&["wellposed", "--lab", "quadratic", "--r-grid", "0.25:4:6", "--out", &out_arg(&w)]), 0);
    let table = fs::read_to_string(w.join("continuity.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 7);
    assert!(w.join("wellposedness.csv").is_file());
    assert_eq!(read_json(&w.join("wellposed.json"))["result"]["alpha_beta"]["beta"], "+inf");
}

#[test]
fn find_two_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path, threads: &'static str| {
        vec![
            "find-two".to_string(), "--preset".into(), "two-minima-symmetric".into(), "--threads".into(), threads.into(),
            "--out".into(), out_arg(d),
        ]
    };
    assert_eq!(run(std::iter::once("relosc".to_string()).chain(args(a.path(), "1"))), 0);
    assert_eq!(run(std::iter::once("relosc".to_string()).chain(args(b.path(), "4"))), 0);
    for f in ["find_two.json", "scan.csv", "minimum_a.csv", "minimum_b.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
