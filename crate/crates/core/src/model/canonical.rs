//! Canonical JSON: object keys sorted, two-space indentation, trailing LF.

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::types::ModelHypothesis;

pub const SCHEMA_VERSION: u32 = 1;

/// Serializes through `serde_json::Value`, whose map type keeps keys sorted.
pub fn to_canonical_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("model values always serialize")
}

/// Pretty canonical text with a trailing newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    let v = to_canonical_value(value);
    let mut s = serde_json::to_string_pretty(&v).expect("json");
    s.push('\n');
    s
}

/// Compact canonical text (hash input).
pub fn to_compact_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(&to_canonical_value(value)).expect("json")
}

/// Wraps `value` as `{"schema_version": 1, <key>: value}`.
pub fn versioned<T: Serialize>(key: &str, value: &T) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    map.insert(key.into(), to_canonical_value(value));
    serde_json::Value::Object(map)
}

pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

/// Content address of a hypothesis: hash of its canonical form without the id.
pub fn content_id(h: &ModelHypothesis) -> String {
    let mut v = to_canonical_value(h);
    if let serde_json::Value::Object(map) = &mut v {
        map.remove("id");
    }
    let text = serde_json::to_string(&v).expect("json");
    short_hash(text.as_bytes())
}
