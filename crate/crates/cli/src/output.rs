//! Deterministic report emission: shortest round-trip float text, stable
//! JSON key order (sorted maps), non-finite values as strings, and CSV
//! with `.` decimals and a header row.

use std::fs;
use std::path::Path;

use anyhow::Context;
use genbound_core::bounds::{BoundReport, TailReport};
use genbound_core::process::McEstimate;
use serde_json::{json, Map, Value};

/// Shortest round-trip decimal text for a float; non-finite values become
/// `inf`, `-inf`, or `nan` so CSV and JSON stay parseable.
pub fn num_str(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

/// JSON value for a float: a number when finite, else the string form.
pub fn json_num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(num_str(x))
    }
}

/// One named pass/fail comparison recorded in a summary report.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
        })
    }
}

/// Serializes a per-level bound report, `inf`-safe.
pub fn report_to_json(report: &BoundReport) -> Value {
    let terms: Vec<Value> = report
        .per_level_terms
        .iter()
        .map(|t| json!({"k": t.k, "term": json_num(t.term)}))
        .collect();
    json!({
        "formula": report.formula_id.as_str(),
        "bound_value": json_num(report.bound_value),
        "per_level_terms": terms,
        "truncation_k": report.truncation_k,
        "tail_estimate": json_num(report.tail_estimate),
    })
}

/// Serializes a tail-probability report.
pub fn tail_report_to_json(report: &TailReport) -> Value {
    let mut m = Map::new();
    m.insert("formula".into(), json!(report.formula_id.as_str()));
    m.insert("probability".into(), json_num(report.probability));
    m.insert("threshold".into(), json_num(report.threshold));
    if let Some(t) = report.additive_threshold {
        m.insert("additive_threshold".into(), json_num(t));
    }
    Value::Object(m)
}

/// Serializes a Monte-Carlo estimate.
pub fn estimate_to_json(est: &McEstimate) -> Value {
    json!({
        "estimate": json_num(est.estimate),
        "std_error": json_num(est.std_error),
        "samples": est.samples,
    })
}

/// Writes pretty JSON with a trailing newline, creating parent dirs.
pub fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes a CSV file (header row first), creating parent dirs.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("opening {} for writing", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
