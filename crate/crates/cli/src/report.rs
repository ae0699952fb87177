use std::io::Write;
use std::path::Path;

use crossgreed::Mass;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: &str = "1";

/// `{"value": f64, "exact": "p/q" | null}`; non-finite floats become null.
pub fn num<M: Mass>(m: &M) -> Value {
    json!({
        "value": finite(m.to_f64()),
        "exact": if M::is_exact() { Some(m.to_string()) } else { None },
    })
}

pub fn nums<M: Mass>(v: &[M]) -> Value {
    Value::Array(v.iter().map(num).collect())
}

pub fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Adds `schema_version` and `command`, then writes pretty JSON (keys sorted) to `out` or
/// stdout.
pub fn emit(command: &str, mut body: Value, out: Option<&Path>) -> anyhow::Result<()> {
    let obj = body.as_object_mut().expect("report bodies are objects");
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("command".into(), json!(command));
    let mut text = serde_json::to_string_pretty(&body)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
