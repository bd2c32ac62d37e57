//! Report assembly and delivery. Exact scalars are emitted as fraction
//! strings, floats as JSON numbers; CSV columns are fixed per subcommand.

use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use serde_json::{json, Value};

use heaviness::{DeficitTrace, FirstFailure, HeavinessReport, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Both renderings of a report; the format flag picks one at delivery.
pub struct Output {
    pub json: Value,
    pub csv: String,
}

impl Output {
    pub fn deliver(&self, format: Format, out: Option<&PathBuf>) -> Result<()> {
        let text = match format {
            Format::Json => format!("{:#}\n", self.json),
            Format::Csv => self.csv.clone(),
        };
        match out {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

/// Quote a CSV field when it holds a separator or quote.
pub fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Exact values as strings, floats as numbers.
pub fn scalar_json<S: Scalar>(value: &S) -> Value {
    if S::EXACT {
        json!(value.to_string())
    } else {
        json!(value.to_f64_lossy())
    }
}

pub fn failure_json(failure: &FirstFailure) -> Value {
    match failure {
        FirstFailure::At(n) => json!(n),
        FirstFailure::BeyondHorizon => json!("beyond-horizon"),
    }
}

pub fn report_json<S: Scalar>(report: &HeavinessReport<S>) -> Value {
    json!({
        "first_failure": failure_json(&report.first_failure),
        "heavy": report.is_heavy(),
        "min_deficit": scalar_json(&report.min_deficit),
        "argmin_time": report.argmin_time,
        "zero_times": report.zero_times,
    })
}

pub fn trace_json<S: Scalar>(trace: &DeficitTrace<S>) -> Value {
    let deficits: Vec<Value> = trace.iter().map(|(_, d)| scalar_json(d)).collect();
    json!({
        "start": trace.start(),
        "end": trace.end(),
        "mode": trace.mode().label(),
        "deficits": deficits,
    })
}

pub fn trace_csv<S: Scalar>(trace: &DeficitTrace<S>) -> String {
    let mut csv = String::from("n,deficit\n");
    for (n, d) in trace.iter() {
        csv.push_str(&format!("{n},{d}\n"));
    }
    csv
}
