use drill_core::pipeline::PipelineConfig;
use serde_json::{json, Value};
use std::path::PathBuf;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema() -> Value {
    let text = std::fs::read_to_string(root().join("schema/pipeline-config.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn resolve<'a>(schema: &'a Value, node: &'a Value) -> &'a Value {
    if let Some(r) = node.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return &schema["$defs"][name];
    }
    if let Some(alts) = node.get("anyOf").and_then(Value::as_array) {
        for a in alts {
            if a.get("type") != Some(&json!("null")) {
                return resolve(schema, a);
            }
        }
    }
    node
}

/// Walks a serialized value alongside its schema node, requiring the object
/// keys to coincide exactly when `exact` is set (every optional field filled).
fn walk(schema: &Value, node: &Value, value: &Value, path: &str) {
    let node = resolve(schema, node);
    if let Some(alts) = node.get("oneOf").and_then(Value::as_array) {
        let kind = &value["kind"];
        let alt = alts.iter().find(|a| &a["properties"]["kind"]["const"] == kind).unwrap_or_else(|| panic!("{path}: no alternative for {kind}"));
        return walk(schema, alt, value, path);
    }
    match value {
        Value::Object(map) => {
            let props = node["properties"].as_object();
            match props {
                Some(props) => {
                    for (k, v) in map {
                        let sub = props.get(k).unwrap_or_else(|| panic!("{path}.{k} missing from schema"));
                        walk(schema, sub, v, &format!("{path}.{k}"));
                    }
                    for req in node["required"].as_array().into_iter().flatten() {
                        assert!(map.contains_key(req.as_str().unwrap()), "{path}: required {req} not serialized");
                    }
                }
                None => {
                    let extra = &node["additionalProperties"];
                    assert!(extra.is_object(), "{path}: object without properties in schema");
                    for (k, v) in map {
                        walk(schema, extra, v, &format!("{path}.{k}"));
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                walk(schema, &node["items"], v, &format!("{path}[{i}]"));
            }
        }
        Value::String(s) => {
            if let Some(choices) = node.get("enum").and_then(Value::as_array) {
                assert!(choices.contains(value), "{path}: {s} not among {choices:?}");
            }
            if let Some(c) = node.get("const") {
                assert_eq!(c, value, "{path}");
            }
        }
        _ => {}
    }
}

fn full_config() -> Value {
    json!({
        "name": "full",
        "seed": 3,
        "space": {"kind": "tiling:7,3", "radius": 6},
        "axis": {"word": {"turns": [1, 2]}, "vertex": 0, "slot": 1, "window": 2},
        "profile": {
            "kind": "exact",
            "overrides": {"k": 1, "s": 2, "d": 3, "cover_window": 1, "depth_max": 1, "sigma": 1, "samples": 5,
                          "ball_cap": 9, "theta": "1/2", "delta_policy": "sample:10:1"},
            "ledger": {"delta0": "1", "lambda0": "0", "l0": "5", "a0": "1", "delta1": "100", "sigma_big0": "7", "r_pi": "3"},
            "phi": {"kind": "table", "points": {"1": "2"}}
        },
        "drill": {"tubes": [{"word": {"letters": [0]}, "vertex": 1, "slot": 0, "window": 1}], "chi": 4, "basepoint": 0,
                  "schedule": [0], "stabilization_radius": 2, "delta2": 5, "delta_ball": 6},
        "boundary": {"radius": 5, "points": 4, "pairs": 3, "delta": "1", "l_max": "9", "sphere_radius": 4, "big_delta": "2"},
        "audits": ["separation", "balls"],
        "stages": ["generate", "constants"],
        "output": "out"
    })
}

#[test]
fn schema_covers_every_config_field() {
    let s = schema();
    let cfg: PipelineConfig = serde_json::from_value(full_config()).unwrap();
    let back = serde_json::to_value(&cfg).unwrap();
    assert_eq!(back, full_config(), "a fully populated config must round-trip");
    walk(&s, &s, &back, "$");
    for phi in [json!({"kind": "identity"}), json!({"kind": "affine", "slope": "2", "intercept": "1/3"})] {
        walk(&s, &s["$defs"]["phi"], &phi, "$.phi");
    }
}

#[test]
fn schema_enums_match_the_parsers() {
    let s = schema();
    for st in s["properties"]["stages"]["items"]["enum"].as_array().unwrap() {
        let cfg = json!({"name": "x", "seed": 0, "space": {"kind": "cycle:5"}, "stages": [st]});
        serde_json::from_value::<PipelineConfig>(cfg).unwrap_or_else(|e| panic!("stage {st}: {e}"));
    }
    for a in s["properties"]["audits"]["items"]["enum"].as_array().unwrap() {
        let cfg = json!({"name": "x", "seed": 0, "space": {"kind": "cycle:5"}, "audits": [a], "stages": ["generate"]});
        serde_json::from_value::<PipelineConfig>(cfg).unwrap_or_else(|e| panic!("audit {a}: {e}"));
    }
    let required: Vec<&str> = s["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for r in &required {
        let mut cfg = json!({"name": "x", "seed": 0, "space": {"kind": "cycle:5"}, "stages": ["generate"]});
        cfg.as_object_mut().unwrap().remove(*r);
        assert!(serde_json::from_value::<PipelineConfig>(cfg).is_err(), "{r} should be required");
    }
}

#[test]
fn shipped_configs_follow_the_schema() {
    let s = schema();
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = PipelineConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        let raw: Value = serde_json::from_str(&text).unwrap();
        walk(&s, &s, &raw, &path.display().to_string());
    }
}
