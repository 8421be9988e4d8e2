//! Deterministic JSON and CSV output with floats rounded to nine significant
//! digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::Failure;

pub const SIG_DIGITS: usize = 9;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(x: &T) -> String {
    let mut v = serde_json::to_value(x).expect("report serializes");
    round_value(&mut v);
    serde_json::to_string_pretty(&v).expect("json value serializes") + "\n"
}

/// Writes `text` to `out` when given, stdout otherwise.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Usage(format!("stdout: {e}"))),
    }
}

pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        round_sig(x).to_string()
    } else {
        String::new()
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), Failure> {
    let fail = |e: &dyn std::fmt::Display| Failure::Usage(format!("cannot write {}: {e}", path.display()));
    let file = File::create(path).map_err(|e| fail(&e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| fail(&e))?;
    for r in rows {
        w.write_record(r.iter().map(|&x| fmt_num(x))).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(round_sig(0.302_868_123_456), 0.302_868_123);
        assert_eq!(round_sig(-123_456_789_012.0), -123_456_789_000.0);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn nested_rounding_leaves_integers() {
        let s = to_json(&serde_json::json!({"a": [1.0000000001, 7], "b": {"c": 2.0 / 3.0}}));
        assert!(s.contains("1.0") && s.contains("0.666666667") && s.contains(" 7"));
    }
}
