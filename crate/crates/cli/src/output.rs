use std::io::Write;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

pub const SCHEMA: &str = "v1";

/// A command's result: a JSON summary plus an optional table of rows.
pub struct Report {
    pub summary: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub passed: bool,
}

impl Report {
    pub fn new(summary: Value, passed: bool) -> Self {
        Self { summary, columns: Vec::new(), rows: Vec::new(), passed }
    }

    pub fn with_table(mut self, columns: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.columns = columns;
        self.rows = rows;
        self
    }
}

pub fn render(config: &RunConfig, report: &Report) -> Result<Vec<u8>> {
    let config_json = serde_json::to_string(config)?;
    match config.format {
        Format::Json => {
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, Value> = report
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), cell_value(v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let mut doc = json!({
                "schema": SCHEMA,
                "config": serde_json::from_str::<Value>(&config_json)?,
                "passed": report.passed,
                "summary": report.summary,
            });
            if !report.columns.is_empty() {
                doc["rows"] = Value::Array(rows);
            }
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# schema={SCHEMA}")?;
            writeln!(out, "# config={config_json}")?;
            writeln!(out, "# passed={}", report.passed)?;
            writeln!(out, "# summary={}", serde_json::to_string(&report.summary)?)?;
            if !report.columns.is_empty() {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(&report.columns)?;
                for row in &report.rows {
                    w.write_record(row)?;
                }
                w.flush()?;
            }
            Ok(out)
        }
    }
}

/// Numbers and booleans become JSON scalars, everything else a string.
fn cell_value(v: &str) -> Value {
    match v {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(|x| if v.contains(['.', 'e', 'E']) { json!(x) } else { v.parse::<i64>().map_or(json!(x), Value::from) })
            .unwrap_or_else(|| Value::String(v.to_string())),
    }
}

pub fn emit(config: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &config.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
