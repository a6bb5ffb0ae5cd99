use std::io::{self, Write};

use esopt_core::fmt::sig12;
use serde_json::Value;

/// Rounds every float in `v` to 12 significant digits so JSON output matches
/// the CSV text exactly.
pub fn round12(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = sig12(x).parse().expect("sig12 output parses");
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round12).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round12(v))).collect())
        }
        other => other,
    }
}

pub fn write_json<W: Write>(mut w: W, v: Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, &round12(v))?;
    writeln!(w)
}

pub fn csv_row<W: Write>(mut w: W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

pub fn num(v: f64) -> String {
    sig12(v)
}
