use std::time::{SystemTime, UNIX_EPOCH};

use renormlab::exact::parse_rational;
use renormlab::{Error, Rational, Result};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Report envelope: tool version, config echo, results and a timestamp.
pub fn document(command: &str, config: Value, results: Value) -> Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "renormlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "results": results,
        "timestamp": timestamp,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Change {
    Added,
    Removed,
    Changed,
    /// Norm values that moved by no more than the old certified radius.
    WithinCertifiedError,
}

impl Change {
    fn tag(&self) -> &'static str {
        match self {
            Change::Added => "added",
            Change::Removed => "removed",
            Change::Changed => "changed",
            Change::WithinCertifiedError => "within-certified-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffEntry {
    pub path: String,
    pub change: Change,
    pub old: Option<Value>,
    pub new: Option<Value>,
}

impl std::fmt::Display for DiffEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: &Option<Value>| v.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string());
        write!(f, "{} {}: {} -> {}", self.change.tag(), self.path, show(&self.old), show(&self.new))
    }
}

fn schema(doc: &Value) -> Option<u64> {
    doc.get("schema_version").and_then(Value::as_u64)
}

/// Semantic diff of two reports: timestamps are ignored, `p/q` strings are
/// compared as rationals, and norm values are compared against the old
/// error radius.
pub fn report_diff(a: &Value, b: &Value) -> Result<Vec<DiffEntry>> {
    match (schema(a), schema(b)) {
        (Some(x), Some(y)) if x == y => {}
        (x, y) => {
            return Err(Error::SchemaMismatch(format!(
                "schema versions {} and {}",
                x.map_or("missing".into(), |v| v.to_string()),
                y.map_or("missing".into(), |v| v.to_string())
            )))
        }
    }
    let mut out = Vec::new();
    for key in ["command", "config", "results"] {
        walk(key, a.get(key), b.get(key), &mut out);
    }
    Ok(out)
}

fn as_rational(v: &Value) -> Option<Rational> {
    v.as_str().and_then(|s| parse_rational(s).ok())
}

fn is_norm_value(m: &Map<String, Value>) -> bool {
    m.contains_key("value") && m.contains_key("error_radius")
}

fn walk(path: &str, a: Option<&Value>, b: Option<&Value>, out: &mut Vec<DiffEntry>) {
    let entry = |change, a: Option<&Value>, b: Option<&Value>| DiffEntry {
        path: path.to_string(),
        change,
        old: a.cloned(),
        new: b.cloned(),
    };
    match (a, b) {
        (None, None) => {}
        (Some(_), None) => out.push(entry(Change::Removed, a, None)),
        (None, Some(_)) => out.push(entry(Change::Added, None, b)),
        (Some(Value::Object(x)), Some(Value::Object(y))) => {
            if is_norm_value(x) && is_norm_value(y) {
                if let Some(change) = norm_change(x, y) {
                    out.push(entry(change, a, b));
                }
                return;
            }
            let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                if k == "timestamp" {
                    continue;
                }
                walk(&format!("{path}.{k}"), x.get(k), y.get(k), out);
            }
        }
        (Some(Value::Array(x)), Some(Value::Array(y))) => {
            for i in 0..x.len().max(y.len()) {
                walk(&format!("{path}[{i}]"), x.get(i), y.get(i), out);
            }
        }
        (Some(x), Some(y)) => {
            let same = match (as_rational(x), as_rational(y)) {
                (Some(p), Some(q)) => p == q,
                _ => x == y,
            };
            if !same {
                out.push(entry(Change::Changed, a, b));
            }
        }
    }
}

fn norm_change(old: &Map<String, Value>, new: &Map<String, Value>) -> Option<Change> {
    let (Some(v0), Some(r0), Some(v1)) = (
        old.get("value").and_then(as_rational),
        old.get("error_radius").and_then(as_rational),
        new.get("value").and_then(as_rational),
    ) else {
        return (old != new).then_some(Change::Changed);
    };
    if v0 == v1 {
        return None;
    }
    let gap = if v1 > v0 { &v1 - &v0 } else { &v0 - &v1 };
    Some(if gap <= r0 { Change::WithinCertifiedError } else { Change::Changed })
}
