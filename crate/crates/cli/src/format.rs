use serde::Serialize;
use serde_json::Value;

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest text that reads back as `round12(x)`. Very small or very large
/// magnitudes use exponent notation.
pub fn float(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        "0".into()
    } else if r.is_finite() && (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// JSON value of `v` with every non-integer number rounded to 12
/// significant digits.
pub fn json_value<T: Serialize>(v: &T) -> serde_json::Result<Value> {
    let mut value = serde_json::to_value(v)?;
    round_tree(&mut value);
    Ok(value)
}

fn round_tree(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_tree),
        Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline.
pub fn json_text<T: Serialize>(v: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(&json_value(v)?)?;
    s.push('\n');
    Ok(s)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// First path at which `a` and `b` differ, comparing numbers with relative
/// tolerance `tol`.
pub fn json_mismatch(a: &Value, b: &Value, tol: f64, path: &str) -> Option<String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64()?, y.as_f64()?);
            (!close(x, y, tol)).then(|| format!("{path}: {x} vs {y}"))
        }
        (Value::Array(xs), Value::Array(ys)) => {
            if xs.len() != ys.len() {
                return Some(format!("{path}: length {} vs {}", xs.len(), ys.len()));
            }
            xs.iter().zip(ys).enumerate().find_map(|(i, (x, y))| json_mismatch(x, y, tol, &format!("{path}[{i}]")))
        }
        (Value::Object(xs), Value::Object(ys)) => {
            if let Some(k) = xs.keys().chain(ys.keys()).find(|k| !xs.contains_key(*k) || !ys.contains_key(*k)) {
                return Some(format!("{path}.{k}: present on one side only"));
            }
            xs.iter().find_map(|(k, x)| json_mismatch(x, &ys[k], tol, &format!("{path}.{k}")))
        }
        _ => (a != b).then(|| format!("{path}: {a} vs {b}")),
    }
}
