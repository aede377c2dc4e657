//! Helpers shared by the CLI test targets.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }

    pub fn error_json(&self) -> Value {
        serde_json::from_str(self.stderr.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", self.stderr))
    }
}

pub fn sodelie(args: &[&str]) -> Run {
    sodelie_env(args, &[])
}

pub fn sodelie_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sodelie"));
    cmd.args(args).env_remove("SODELIE_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

pub fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

pub fn schema(name: &str) -> Value {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "schemas", &format!("{name}.json")].iter().collect();
    serde_json::from_str(&std::fs::read_to_string(&p).expect("schema file")).expect("schema is JSON")
}

/// Validates `doc` against `schemas/<name>.json`, listing every violation.
pub fn check_schema(name: &str, doc: &Value) -> Result<(), String> {
    let validator = jsonschema::validator_for(&schema(name)).map_err(|e| format!("schema {name}: {e}"))?;
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(format!("{name}: {}", errors.join("; ")))
    }
}

pub fn temp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("sodelie-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).expect("temp dir");
    d
}

fn literal() -> impl Strategy<Value = String> {
    prop_oneof![
        (0i64..20).prop_map(|n| n.to_string()),
        (1i64..12, 2i64..9).prop_map(|(p, q)| format!("{p}/{q}")),
    ]
}

/// Largest total degree the parser accepts.
pub const MAX_DEGREE: u32 = 16;

/// Well-formed polynomial expressions over `x` and `v` with an upper bound
/// on their total degree.
fn bounded_poly() -> impl Strategy<Value = (String, u32)> {
    let leaf = prop_oneof![
        Just(("x".to_string(), 1)),
        Just(("v".to_string(), 1)),
        literal().prop_map(|s| (s, 0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|((a, da), (b, db))| (format!("{a} + {b}"), da.max(db))),
            (inner.clone(), inner.clone()).prop_map(|((a, da), (b, db))| (format!("{a} - {b}"), da.max(db))),
            (inner.clone(), inner.clone()).prop_map(|((a, da), (b, db))| (format!("({a})*({b})"), da + db)),
            (inner.clone(), 0u32..4).prop_map(|((a, d), k)| (format!("({a})^{k}"), d * k)),
            inner.clone().prop_map(|(a, d)| (format!("-({a})"), d)),
            (inner, 1i64..5).prop_map(|((a, d), q)| (format!("({a})/{q}"), d)),
        ]
    })
    .prop_filter("degree within the parser limit", |(_, d)| *d <= MAX_DEGREE)
}

pub fn poly_src() -> impl Strategy<Value = String> {
    bounded_poly().prop_map(|(s, _)| s)
}

/// Well-formed field expressions over `x` and `v`.
pub fn field_src() -> impl Strategy<Value = String> {
    let term = (poly_src(), prop_oneof![Just("x"), Just("v")], any::<bool>()).prop_map(|(p, var, bare)| {
        if bare {
            format!("d/d{var}")
        } else {
            format!("({p})*d/d{var}")
        }
    });
    (prop::collection::vec((term, any::<bool>()), 1..4), any::<bool>()).prop_map(|(terms, lead)| {
        let mut s = if lead { "-".to_string() } else { String::new() };
        for (i, (t, plus)) in terms.into_iter().enumerate() {
            if i > 0 {
                s.push_str(if plus { " + " } else { " - " });
            }
            s.push_str(&t);
        }
        s
    })
}
