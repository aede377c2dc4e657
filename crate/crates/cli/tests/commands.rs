mod common;

use common::{check_schema, config, sodelie, sodelie_env, temp_dir};
use serde_json::{json, Value};
use sodelie::liealg::catalog;

fn ok_report(name: &str, args: &[&str]) -> Value {
    let r = sodelie(args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    let doc = r.json();
    check_schema(name, &doc).unwrap();
    doc
}

fn error_doc(args: &[&str], code: i32) -> Value {
    let r = sodelie(args);
    assert_eq!(r.code, code, "{args:?}: {}{}", r.stdout, r.stderr);
    let doc = r.error_json();
    check_schema("error", &doc).unwrap();
    doc
}

#[test]
fn close_reports_the_eight_dimensional_algebra() {
    let doc = ok_report("close", &["close", "--generators", &config("forced_generators.json")]);
    assert_eq!(doc["dimension"], 8);
    assert_eq!(doc["closed"], true);
    assert_eq!(doc["killing_signature"]["positive"], 5);
    assert_eq!(doc["killing_signature"]["negative"], 3);
    assert_eq!(doc["nondegenerate"], true);
}

#[test]
fn close_overflow_is_a_false_verdict() {
    let r = sodelie(&["close", "--generators", &config("forced_generators.json"), "--max-dim", "4"]);
    assert_eq!(r.code, 1);
    let doc = r.json();
    check_schema("close", &doc).unwrap();
    assert_eq!(doc["closed"], false);
    assert!(doc["overflow"].is_object());
}

#[test]
fn scheme_on_the_catalog() {
    let doc = ok_report("scheme", &["scheme", "--w", "riccati2_scheme_W", "--v2", "riccati2_scheme_V2"]);
    assert_eq!(doc["is_scheme"], true);
    assert_eq!(doc["v2_closed"], false);
    let ws = doc["v2_witnesses"].as_array().unwrap();
    assert!(ws.iter().any(|w| w["left"] == 0 && w["right"] == 6));
}

#[test]
fn open_w_is_a_false_verdict() {
    let v2 = catalog("riccati2_scheme_V2").unwrap();
    let doc = json!({ "format_version": 1, "variables": ["x", "v"], "basis": [v2[0].to_dsl(), v2[2].to_dsl()] });
    let w = temp_dir("scheme").join("w.json");
    std::fs::write(&w, doc.to_string()).unwrap();
    let r = sodelie(&["scheme", "--w", w.to_str().unwrap(), "--v2", "riccati2_scheme_V2"]);
    assert_eq!(r.code, 1);
    let doc = r.json();
    check_schema("scheme", &doc).unwrap();
    assert_eq!(doc["w_closed"], false);

    let r = sodelie(&["scheme", "--w", "riccati2_scheme_V2", "--v2", "riccati2_scheme_W"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.error_json()["error"]["code"], "not_in_span");
}

#[test]
fn lift_lists_the_first_order_system() {
    let doc = ok_report("lift", &["lift", "--sode", &config("forced_generic.json")]);
    let terms = doc["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 2);
    assert_eq!(terms[1]["coeff"], "f");
    assert_eq!(terms[1]["field"], "d/dv");
}

#[test]
fn decompose_success_and_failure() {
    let doc = ok_report("decompose", &["decompose", "--system", &config("forced_generic.json"), "--basis", "sl3"]);
    let c: Vec<&str> = doc["coefficients"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(c, ["1", "f", "0", "0", "0", "0", "0", "0"]);

    let r = sodelie(&["decompose", "--system", &config("forced_generic.json"), "--basis", "riccati2_scheme_W"]);
    assert_eq!(r.code, 1);
    let doc = r.json();
    check_schema("decompose", &doc).unwrap();
    assert_eq!(doc["decomposed"], false);
    assert!(doc["failure"]["residual"].is_string());
}

#[test]
fn certify_the_riccati_family() {
    let args = ["certify", "--system", &config("riccati2_generic.json"), "--scheme", "catalog"];
    let doc = ok_report("certify", &[&args[..], &["--transform", "riccati2", "--target", "sl3"]].concat());
    assert_eq!(doc["verdict"], true);
    let explicit = ok_report("certify", &[&args[..], &["--transform", "v=a3^(-1)*sqrt(a3)", "--target", "sl3"]].concat());
    assert_eq!(explicit["target_coefficients"], doc["target_coefficients"]);

    let r = sodelie(&[&args[..], &["--transform", "identity", "--target", "sl3"]].concat());
    assert_eq!(r.code, 1);
    let doc = r.json();
    check_schema("certify", &doc).unwrap();
    assert_eq!(doc["verdict"], false);
    assert!(!doc["failures"].as_array().unwrap().is_empty());
}

#[test]
fn integrate_writes_csv_and_a_report() {
    let dir = temp_dir("integrate");
    let report = dir.join("report.json");
    let r = sodelie(&[
        "integrate",
        "--system",
        &config("forced_sin.json"),
        "--ic",
        "0.3,-0.2",
        "--span",
        "0:1",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("t,x,v"));
    assert_eq!(lines.next(), Some("0,0.3,-0.2"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    check_schema("integrate", &doc).unwrap();
    assert_eq!(doc["status"], "completed");
    assert_eq!(doc["t_end"], 1.0);
}

#[test]
fn blow_up_is_a_numerical_failure() {
    let dir = temp_dir("blowup");
    let report = dir.join("report.json");
    let r = sodelie(&[
        "integrate",
        "--system",
        &config("unforced.json"),
        "--ic",
        "-1,-1",
        "--span",
        "0:2",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 3);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    check_schema("integrate", &doc).unwrap();
    assert_eq!(doc["status"], "blew_up");
    assert!((doc["t_event"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn superpose_and_verify_from_csv_files() {
    let dir = temp_dir("superpose");
    let cfg = config("riccati2.json");
    let mut paths = Vec::new();
    for (i, ic) in ["0.5,0.1", "1,0", "0,0.5", "0.8,0.3"].iter().enumerate() {
        let r = sodelie(&["integrate", "--system", &cfg, "--ic", ic, "--span", "0:2"]);
        assert_eq!(r.code, 0, "{ic}: {}", r.stderr);
        let p = dir.join(format!("s{i}.csv"));
        std::fs::write(&p, &r.stdout).unwrap();
        paths.push(p.to_string_lossy().into_owned());
    }
    let sols = paths[..3].join(",");
    let doc = ok_report(
        "superpose",
        &["superpose", "--family", &cfg, "--solutions", &sols, "--target-ic", "0.8,0.3", "--t0", "0", "--eval-at", "0,1,2"],
    );
    assert_eq!(doc["chart"], "riccati2");
    let last = &doc["values"][2];
    let target: Vec<f64> = std::fs::read_to_string(&paths[3])
        .unwrap()
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(target[0], 2.0);
    assert!((last["x"].as_f64().unwrap() - target[1]).abs() < 1e-6);
    assert!((last["v"].as_f64().unwrap() - target[2]).abs() < 1e-6);

    let doc = ok_report("verify", &["verify", "--family", &cfg, "--solutions", &sols, "--target", &paths[3]]);
    assert_eq!(doc["passed"], true);
    assert!(doc["seed"].is_null());
}

#[test]
fn verify_samples_from_the_seed() {
    let cfg = config("ghj.json");
    let doc = ok_report("verify", &["verify", "--family", &cfg]);
    assert_eq!(doc["seed"], 2024);
    assert!(doc["companion_residual"].as_f64().unwrap() < 1e-8);

    let env = sodelie_env(&["verify", "--family", &cfg], &[("SODELIE_SEED", "7")]);
    assert_eq!(env.json()["seed"], 7);
    let flag = sodelie_env(&["verify", "--family", &cfg, "--seed", "11"], &[("SODELIE_SEED", "7")]);
    assert_eq!(flag.json()["seed"], 11);
    let bad = sodelie_env(&["verify", "--family", &cfg], &[("SODELIE_SEED", "seven")]);
    assert_eq!(bad.code, 2);
}

#[test]
fn tight_tolerance_is_a_false_verdict() {
    let r = sodelie(&["verify", "--family", &config("forced_sin.json"), "--tol", "1e-20"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["passed"], false);
}

#[test]
fn input_errors_exit_with_two() {
    let doc = error_doc(&["bracket", "d/dy", "d/dx"], 2);
    assert_eq!(doc["error"]["code"], "parse_error");
    assert_eq!(doc["error"]["location"]["line"], 1);
    assert_eq!(doc["error"]["location"]["column"], 1);

    let doc = error_doc(&["bracket", "0.5*d/dx", "d/dv"], 2);
    assert_eq!(doc["error"]["code"], "parse_error");

    let doc = error_doc(&["close", "--generators", "/nonexistent/file.json"], 2);
    assert_eq!(doc["error"]["code"], "io_error");

    let doc = error_doc(&["integrate", "--system", &config("forced_sin.json"), "--ic", "a,b", "--span", "0:1"], 2);
    assert_eq!(doc["error"]["code"], "usage_error");

    let doc = error_doc(&["frobnicate"], 2);
    assert_eq!(doc["error"]["code"], "usage_error");

    let dir = temp_dir("badconfig");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"format_version": 1, "family": {"g": "1.5", "h": "0", "j": "0"}}"#).unwrap();
    let doc = error_doc(&["lift", "--sode", bad.to_str().unwrap()], 2);
    assert_eq!(doc["error"]["code"], "parse_error");
    assert_eq!(doc["error"]["location"]["input"], "family.g");
}

#[test]
fn help_exits_cleanly() {
    let r = sodelie(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("superpose"));
}
