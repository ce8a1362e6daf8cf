//! The verify report against `schema/verify.schema.json`.

use serde_json::{json, Value};

use polyomega::commands::verify_json;
use polyomega::config::ExperimentConfig;
use polyomega::report::Provenance;
use polyomega_core::asymptotics::{verify_theorem, TheoremParams, YRule};
use polyomega_core::polyarith::{parse_system, validate_system};

const SCHEMA: &str = include_str!("../schema/verify.schema.json");

fn type_ok(ty: &str, v: &Value) -> bool {
    match ty {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        other => panic!("schema uses unsupported type {other}"),
    }
}

/// Validates `v` against the keywords the schema file uses; returns the
/// first failing path.
fn check(schema: &Value, v: &Value, path: &str) -> Result<(), String> {
    let fail = |why: &str| Err(format!("{path}: {why}"));
    let s = schema.as_object().expect("schema node is an object");
    for key in s.keys() {
        let known = [
            "$schema",
            "title",
            "description",
            "type",
            "required",
            "properties",
            "additionalProperties",
            "items",
            "enum",
            "oneOf",
            "minimum",
            "exclusiveMinimum",
            "exclusiveMaximum",
            "minLength",
            "maxLength",
        ];
        assert!(known.contains(&key.as_str()), "unsupported keyword {key}");
    }
    if let Some(ty) = s.get("type").and_then(Value::as_str) {
        if !type_ok(ty, v) {
            return fail(&format!("expected {ty}"));
        }
    }
    if let Some(options) = s.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return fail("not in enum");
        }
    }
    if let Some(alts) = s.get("oneOf").and_then(Value::as_array) {
        let matched = alts.iter().filter(|a| check(a, v, path).is_ok()).count();
        if matched != 1 {
            return fail(&format!("matches {matched} oneOf branches"));
        }
    }
    if let Some(x) = v.as_f64() {
        let bound = |k: &str| s.get(k).and_then(Value::as_f64);
        if bound("minimum").is_some_and(|m| x < m)
            || bound("exclusiveMinimum").is_some_and(|m| x <= m)
            || bound("exclusiveMaximum").is_some_and(|m| x >= m)
        {
            return fail("out of range");
        }
    }
    if let Some(text) = v.as_str() {
        let len = text.chars().count() as u64;
        if s.get("minLength").and_then(Value::as_u64).is_some_and(|m| len < m)
            || s.get("maxLength").and_then(Value::as_u64).is_some_and(|m| len > m)
        {
            return fail("bad length");
        }
    }
    if let Some(obj) = v.as_object() {
        for req in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(req.as_str().unwrap()) {
                return fail(&format!("missing {req}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, item) in obj {
            let sub = format!("{path}.{k}");
            match (props.and_then(|p| p.get(k)), s.get("additionalProperties")) {
                (Some(p), _) => check(p, item, &sub)?,
                (None, Some(Value::Bool(false))) => return fail(&format!("unexpected key {k}")),
                (None, Some(extra @ Value::Object(_))) => check(extra, item, &sub)?,
                (None, _) => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, item) in arr.iter().enumerate() {
            check(items, item, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn sample_report() -> Value {
    let system = validate_system(parse_system("0,1;1,1").unwrap(), 0).unwrap();
    let params = TheoremParams::defaults_for(&system);
    let report = verify_theorem(&system, &[3, 1000, 20_000], YRule::Full, &params).unwrap();
    let cfg = ExperimentConfig::default();
    verify_json(&report, &Provenance::new("verify", &cfg.resolved(&system)))
}

#[test]
fn report_validates() {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let doc = sample_report();
    check(&schema, &doc, "$").unwrap();
    // x = 3 has no admissible k.
    assert_eq!(doc["entries"][0]["argsup"], Value::Null);
    assert_eq!(doc["entries"][0]["admissible"], false);
}

#[test]
fn schema_rejects_drift() {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let doc = sample_report();
    let mut missing = doc.clone();
    missing.as_object_mut().unwrap().remove("headline");
    assert!(check(&schema, &missing, "$").is_err());
    let mut extra = doc.clone();
    extra["entries"][1]["note"] = json!("x");
    assert!(check(&schema, &extra, "$").is_err());
    let mut wrong = doc.clone();
    wrong["y_rule"] = json!("half");
    assert!(check(&schema, &wrong, "$").is_err());
    let mut negative = doc;
    negative["entries"][1]["sup_ratio"] = json!(-1.0);
    assert!(check(&schema, &negative, "$").is_err());
}
