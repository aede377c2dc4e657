//! JSON report documents. Indices are 0-based positions in the listed bases.

use serde_json::{json, Map, Value};
use sodelie::integrate::{Status, Trajectory};
use sodelie::liealg::{BracketWitness, Closure, KillingSignature, SchemeReport};
use sodelie::polyvf::{fmt_rational, PolyVectorField};
use sodelie::superpose::{SuperpositionConstants, SuperpositionReport};
use sodelie::tdsys::{Decomposition, Tdvf, TimeExpr};
use sodelie::transform::QuasiLieCertificate;

use crate::config::FORMAT_VERSION;

/// Report skeleton with `format_version` and `command`.
pub fn envelope(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("format_version".into(), json!(FORMAT_VERSION));
    m.insert("command".into(), json!(command));
    m
}

pub fn fields(list: &[PolyVectorField]) -> Value {
    Value::Array(list.iter().map(|f| json!(f.to_dsl())).collect())
}

pub fn times(list: &[TimeExpr]) -> Value {
    Value::Array(list.iter().map(|e| json!(e.to_string())).collect())
}

pub fn witness(w: &BracketWitness) -> Value {
    json!({
        "left": w.left,
        "right": w.right,
        "bracket": w.bracket.to_dsl(),
        "residual": w.residual.to_dsl(),
    })
}

pub fn witnesses(ws: &[BracketWitness]) -> Value {
    Value::Array(ws.iter().map(witness).collect())
}

pub fn tdvf(x: &Tdvf) -> Value {
    Value::Array(
        x.terms()
            .iter()
            .map(|(c, f)| json!({ "coeff": c.to_string(), "field": f.to_dsl() }))
            .collect(),
    )
}

pub fn signature(s: &KillingSignature) -> Value {
    json!({ "positive": s.positive, "negative": s.negative, "zero": s.zero })
}

pub fn closure(c: &Closure, max_dim: usize, sig: Option<&KillingSignature>) -> Map<String, Value> {
    let mut m = envelope("close");
    m.insert("closed".into(), json!(c.closed));
    m.insert("dimension".into(), json!(c.space.dim()));
    m.insert("max_dim".into(), json!(max_dim));
    m.insert("basis".into(), fields(c.space.basis()));
    let constants = c.structure.as_ref().map(|s| {
        Value::Array(
            s.nonzero_entries()
                .into_iter()
                .filter(|(a, b, _, _)| a < b)
                .map(|(a, b, g, q)| json!({ "i": a, "j": b, "k": g, "value": fmt_rational(&q) }))
                .collect(),
        )
    });
    m.insert("structure_constants".into(), constants.unwrap_or(Value::Null));
    m.insert("killing_signature".into(), sig.map(signature).unwrap_or(Value::Null));
    m.insert("nondegenerate".into(), sig.map(|s| json!(s.is_nondegenerate())).unwrap_or(Value::Null));
    m.insert("overflow".into(), c.overflow.as_ref().map(witness).unwrap_or(Value::Null));
    m.insert("generator_escapes".into(), witnesses(&c.generator_escapes));
    m
}

pub fn scheme_body(r: &SchemeReport) -> Value {
    json!({
        "is_scheme": r.is_scheme(),
        "w_closed": r.w_closed,
        "w_witnesses": witnesses(&r.w_witnesses),
        "action_ok": r.action_ok,
        "action_witnesses": witnesses(&r.action_witnesses),
        "v2_closed": r.v2_closed,
        "v2_witnesses": witnesses(&r.v2_witnesses),
    })
}

pub fn decomposition(d: &Decomposition) -> Value {
    match d {
        Decomposition::Coefficients(c) => json!({ "decomposed": true, "coefficients": times(c), "failure": null }),
        Decomposition::Fails { atom, field, residual } => json!({
            "decomposed": false,
            "coefficients": null,
            "failure": { "atom": atom.to_string(), "field": field.to_dsl(), "residual": residual.to_dsl() },
        }),
    }
}

pub fn certificate(c: &QuasiLieCertificate) -> Map<String, Value> {
    let mut m = envelope("certify");
    m.insert("verdict".into(), json!(c.verdict));
    m.insert("scheme".into(), c.scheme.as_ref().map(scheme_body).unwrap_or(Value::Null));
    m.insert("v2_coefficients".into(), c.v2_coefficients.as_deref().map(times).unwrap_or(Value::Null));
    m.insert("transformed".into(), tdvf(&c.transformed));
    m.insert("target_coefficients".into(), c.target_coefficients.as_deref().map(times).unwrap_or(Value::Null));
    let failures = c
        .failures
        .iter()
        .map(|f| {
            json!({
                "stage": f.stage.name(),
                "detail": f.detail,
                "atom": f.atom.as_ref().map(|a| a.to_string()),
                "field": f.field.as_ref().map(|x| x.to_dsl()),
                "residual": f.residual.as_ref().map(|x| x.to_dsl()),
            })
        })
        .collect();
    m.insert("failures".into(), Value::Array(failures));
    m
}

pub fn status(traj: &Trajectory) -> Value {
    match traj.status() {
        Status::Completed => json!({ "status": "completed", "t_event": null, "reason": null }),
        Status::BlewUp { t_event } => json!({ "status": "blew_up", "t_event": t_event, "reason": null }),
        Status::StepFailure { t, reason } => json!({ "status": "step_failure", "t_event": t, "reason": reason }),
    }
}

pub fn constants(c: &SuperpositionConstants) -> Value {
    json!({
        "raw": c.raw,
        "normalized": c.normalized,
        "pivot": c.pivot,
        "chart": c.chart.map(|(a, b)| [a, b]),
        "degenerate": c.degenerate,
    })
}

pub fn superposition(r: &SuperpositionReport, tolerance: f64) -> Map<String, Value> {
    let mut m = envelope("verify");
    m.insert("t0".into(), json!(r.t0));
    m.insert("window".into(), json!([r.window.start, r.window.end]));
    m.insert("determinant".into(), json!(r.determinant));
    m.insert("constants".into(), constants(&r.constants));
    m.insert("deviation".into(), json!(r.deviation));
    m.insert("residual".into(), json!(r.residual));
    m.insert("companion_residual".into(), json!(r.companion_residual));
    m.insert(
        "refits".into(),
        Value::Array(r.refits.iter().map(|(t, c)| json!({ "t": t, "normalized": c })).collect()),
    );
    m.insert("drift".into(), json!(r.drift));
    m.insert("tolerance".into(), json!(tolerance));
    m.insert("passed".into(), json!(r.passes(tolerance)));
    m
}
