//! Output records for the command-line tool.
//!
//! JSON numbers carry 17 significant digits; CSV numbers carry 10.
//! Non-finite values become `null` in JSON and an empty cell in CSV.

use serde_json::{Map, Value};

use crate::tail_bounds::{BoundResult, Method};

/// A JSON number with 17 significant digits.
pub fn json_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    // arbitrary_precision keeps the literal digits
    serde_json::from_str(&format!("{x:.16e}")).unwrap_or(Value::Null)
}

/// A CSV cell with 10 significant digits.
pub fn csv_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9e}")
    } else {
        String::new()
    }
}

/// Ordered JSON object builder.
#[derive(Debug, Default)]
pub struct Record(Map<String, Value>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, x: f64) -> Self {
        self.0.insert(key.to_owned(), json_number(x));
        self
    }

    pub fn int(mut self, key: &str, x: u64) -> Self {
        self.0.insert(key.to_owned(), Value::from(x));
        self
    }

    pub fn str(mut self, key: &str, s: &str) -> Self {
        self.0.insert(key.to_owned(), Value::from(s));
        self
    }

    pub fn bool(mut self, key: &str, b: bool) -> Self {
        self.0.insert(key.to_owned(), Value::from(b));
        self
    }

    pub fn opt_num(mut self, key: &str, x: Option<f64>) -> Self {
        self.0
            .insert(key.to_owned(), x.map(json_number).unwrap_or(Value::Null));
        self
    }

    pub fn value(mut self, key: &str, v: Value) -> Self {
        self.0.insert(key.to_owned(), v);
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("JSON maps always serialize")
    }
}

/// JSON record for one bound:
/// `{k, n, t, method, value, log_value, lambda_used, meaningful, reference_only}`.
pub fn bound_record(k: usize, n: usize, t: f64, r: &BoundResult) -> Record {
    Record::new()
        .int("k", k as u64)
        .int("n", n as u64)
        .num("t", t)
        .str("method", r.method.name())
        .num("value", r.value)
        .num("log_value", r.log_value)
        .opt_num("lambda_used", r.lambda_used)
        .bool("meaningful", r.meaningful)
        .bool("reference_only", r.method.is_reference_only())
}

pub const BOUND_CSV_HEADER: &str = "method,value,log_value,lambda_used,meaningful,reference_only";

pub fn bound_csv_row(r: &BoundResult) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.method.name(),
        csv_number(r.value),
        csv_number(r.log_value),
        r.lambda_used.map(csv_number).unwrap_or_default(),
        r.meaningful,
        r.method.is_reference_only()
    )
}

pub const SWEEP_CSV_HEADER: &str = "t,method,value,log_value";

/// One sweep row; `None` marks a method undefined at this `t`.
pub fn sweep_csv_row(t: f64, method: Method, r: Option<&BoundResult>) -> String {
    match r {
        Some(r) => format!(
            "{},{},{},{}",
            csv_number(t),
            method.name(),
            csv_number(r.value),
            csv_number(r.log_value)
        ),
        None => format!("{},{},,", csv_number(t), method.name()),
    }
}
