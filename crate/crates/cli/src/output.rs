//! Output stamping: every file carries the tool version and a hash of the
//! configuration that produced it.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "commatch";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON of `config`. Object keys are sorted by
/// `serde_json`'s default map, so the hash is independent of field order.
pub fn config_hash(config: &impl Serialize) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_string(&value).expect("value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// First line of every CSV output.
pub fn csv_header_comment(hash: &str) -> String {
    format!("# {TOOL} {VERSION} config {hash}\n")
}

/// Adds `tool`, `version` and `config_hash` to a JSON object.
pub fn stamp(mut value: Value, hash: &str) -> Value {
    if let Value::Object(map) = &mut value {
        map.insert("tool".into(), json!(TOOL));
        map.insert("version".into(), json!(VERSION));
        map.insert("config_hash".into(), json!(hash));
    }
    value
}

pub fn to_json_line(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

/// Writes rows with a header through the `csv` crate into a string.
pub fn csv_string<R: Serialize>(rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}
