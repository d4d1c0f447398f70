//! Canonical JSON: sorted keys, two-space indentation, integers verbatim, every other number
//! with 17 significant digits. Non-finite floats become `null`, `-0` becomes `0`.

use std::fmt::Write;

use serde_json::{Number, Value};

pub fn render(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_number(out: &mut String, n: &Number) {
    if n.is_i64() || n.is_u64() {
        write!(out, "{n}").unwrap();
        return;
    }
    match n.as_f64() {
        // `+ 0.0` turns a negative zero into a positive one.
        Some(f) if f.is_finite() => write!(out, "{:.16e}", f + 0.0).unwrap(),
        _ => out.push_str("null"),
    }
}

fn indent(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        // Short arrays of scalars (label sets, systems, complex numbers) stay on one line.
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, depth);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                indent(out, depth + 1);
                write_value(out, item, depth + 1);
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                indent(out, depth + 1);
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                write_value(out, &map[key], depth + 1);
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        let v = json!({"b": 0.1, "a": [1, -2.5e-7], "c": f64::NAN});
        let text = render(&v);
        assert_eq!(
            text,
            "{\n  \"a\": [1, -2.4999999999999999e-7],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": null\n}\n"
        );
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn nested_layout() {
        let v = json!({"x": [{"k": []}, [1, 2]], "e": {}});
        assert_eq!(render(&v), "{\n  \"e\": {},\n  \"x\": [\n    {\n      \"k\": []\n    },\n    [1, 2]\n  ]\n}\n");
    }
}
