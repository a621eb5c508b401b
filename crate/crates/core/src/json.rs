//! Deterministic JSON output: stable field order and floats rounded to nine
//! significant digits, printed in shortest round-trip form.

use serde::Serialize;
use serde_json::{Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 9;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Value> {
    serde_json::to_value(value).map(canonicalize)
}

/// Single-line canonical JSON.
pub fn to_line<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    serde_json::to_string(&to_value(value)?)
}

pub fn to_pretty<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&to_value(value)?)
}
