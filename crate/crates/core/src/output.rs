//! Deterministic JSON and CSV rendering.
//!
//! JSON keys are sorted, floats carry 17 significant digits, `+inf` is the
//! object `{"inf": true}` and NaN is `null`. CSV uses commas, `.` decimals and
//! an empty cell for `+inf`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::speeds::Speed;

/// A float as a JSON value under the encoding above.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else if x == f64::INFINITY {
        json!({ "inf": true })
    } else if x == f64::NEG_INFINITY {
        json!({ "inf": true, "negative": true })
    } else {
        json!(x)
    }
}

pub fn speed(s: Speed) -> Value {
    num(s.as_f64())
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// 17 significant digits in scientific notation, the same text on every platform.
pub fn float_text(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    format!("{x:.16e}")
}

/// Compact JSON with sorted keys.
pub fn render(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v);
    out
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => write!(out, "{i}").unwrap(),
            (_, Some(u), _) => write!(out, "{u}").unwrap(),
            (_, _, Some(x)) => out.push_str(&float_text(x)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
    }
}

/// Joins a config block and a result object into one document.
pub fn document(config: Value, result: Value) -> Value {
    let mut map = match result {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("config".into(), config);
    Value::Object(map)
}

pub fn csv_cell(x: f64) -> String {
    if x.is_infinite() || x.is_nan() {
        String::new()
    } else {
        float_text(x)
    }
}

pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(csv_cell).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

pub fn write_csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(io::BufWriter::new(file), header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_keys_and_fixed_digits() {
        let v = json!({ "zeta": 1, "alpha": [0.5, 2.0], "mid": { "b": 0.1, "a": null } });
        assert_eq!(
            render(&v),
            r#"{"alpha":[5.0000000000000000e-1,2.0000000000000000e0],"mid":{"a":null,"b":1.0000000000000001e-1},"zeta":1}"#
        );
        let back: Value = serde_json::from_str(&render(&v)).unwrap();
        assert_eq!(back["mid"]["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn infinity_encodings() {
        assert_eq!(render(&num(f64::INFINITY)), r#"{"inf":true}"#);
        assert_eq!(render(&num(f64::NAN)), "null");
        assert_eq!(csv_cell(f64::INFINITY), "");
        let mut buf = Vec::new();
        write_csv(&mut buf, &["h", "c"], vec![vec![1.0, f64::INFINITY]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,c\n1.0000000000000000e0,\n");
    }
}
