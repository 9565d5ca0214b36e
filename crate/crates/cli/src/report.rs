//! Run output: a table, a summary object and named checks, written as CSV or JSON
//! with the library version and the config hash.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Offending instance for replay, when the check failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), summary: json!({}), ..Self::default() }
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn check(&mut self, name: &str, passed: bool, counterexample: Option<Value>) {
        self.checks.push(Check { name: name.into(), passed, counterexample: if passed { None } else { counterexample } });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

pub struct Header {
    pub version: &'static str,
    pub config_hash: String,
    /// Unix seconds; `None` under `--deterministic`.
    pub timestamp: Option<u64>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub fn write(out: &mut dyn Write, report: &Report, header: &Header, format: Format, config: &Value) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let doc = json!({
                "version": header.version,
                "config_hash": header.config_hash,
                "timestamp": header.timestamp,
                "config": config,
                "summary": report.summary,
                "checks": report.checks,
                "columns": report.columns,
                "rows": report.rows,
            });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)
        }
        Format::Csv => {
            write!(out, "# isolab {} config {}", header.version, header.config_hash)?;
            if let Some(t) = header.timestamp {
                write!(out, " at {t}")?;
            }
            writeln!(out)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&report.columns)?;
            for r in &report.rows {
                w.write_record(r.iter().map(cell))?;
            }
            out.write_all(&w.into_inner().map_err(|e| e.into_error())?)?;
            for c in &report.checks {
                writeln!(out, "# check {} {}", c.name, if c.passed { "ok" } else { "FAILED" })?;
            }
            writeln!(out, "# summary {}", report.summary)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_failures() {
        let mut rep = Report::new(&["a", "b"]);
        rep.row(vec![json!(1), json!("x,y")]);
        rep.check("kept", true, Some(json!({"unused": 1})));
        rep.check("broken", false, Some(json!({"instance": [1, 2]})));
        let header = Header { version: "0.0.0", config_hash: "abc".into(), timestamp: None };
        let mut buf = Vec::new();
        write(&mut buf, &rep, &header, Format::Csv, &json!({})).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# isolab 0.0.0 config abc");
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1,\"x,y\"");
        assert_eq!(lines[3], "# check kept ok");
        assert_eq!(lines[4], "# check broken FAILED");
        let failures = rep.failures();
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].counterexample, Some(json!({"instance": [1, 2]})));
        assert!(rep.checks[0].counterexample.is_none());
    }
}
