//! Canonical report rendering.
//!
//! JSON output goes through `serde_json::Value`, whose object map is ordered,
//! so keys are always sorted. Reports carry only integers and strings
//! (rationals are `"p/q"`), so re-parsing and re-serializing a report is
//! byte-identical.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Json,
    #[default]
    Table,
}

/// Sorted-key, pretty-printed JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(report: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(report)?;
    Ok(canonical_value(&value))
}

pub fn canonical_value(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("Value always serializes");
    s.push('\n');
    s
}

/// Aligned two-column table of every leaf, keyed by dotted path.
pub fn to_table<T: Serialize>(report: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(report)?;
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let pad = width - k.chars().count();
        out.push_str(&k);
        out.push_str(&" ".repeat(pad + 2));
        out.push_str(&v);
        out.push('\n');
    }
    Ok(out)
}

pub fn render<T: Serialize>(report: &T, format: Format) -> serde_json::Result<String> {
    match format {
        Format::Json => to_canonical_json(report),
        Format::Table => to_table(report),
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(xs) if xs.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(format!("[{}]", xs.iter().map(|x| scalar(x).unwrap_or_default()).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    if let Some(s) = scalar(v) {
        rows.push((prefix.to_string(), s));
        return;
    }
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&join(k), x, rows);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                flatten(&join(&i.to_string()), x, rows);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}
