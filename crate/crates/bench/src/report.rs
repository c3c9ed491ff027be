//! Report rows and their CSV and JSON forms.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// No reference value or no tolerance applies.
    Info,
}

/// One computed number, optionally checked against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub figure: String,
    /// PIM architecture or GPU series, e.g. `memristive` or `gpu-peak`.
    pub architecture: String,
    pub workload: String,
    pub metric: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub rel_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
}

impl ReportRow {
    pub fn new(scenario: &str, figure: &str, architecture: &str, workload: &str, metric: &str, value: f64) -> Self {
        ReportRow {
            scenario: scenario.into(),
            figure: figure.into(),
            architecture: architecture.into(),
            workload: workload.into(),
            metric: metric.into(),
            value,
            reference: None,
            rel_error: None,
            tolerance: None,
            status: Status::Info,
        }
    }

    /// Attaches a reference. The row passes or fails only when a tolerance
    /// is also given.
    pub fn compare(mut self, reference: Option<f64>, tolerance: Option<f64>) -> Self {
        let Some(r) = reference else { return self };
        let err = (self.value - r).abs() / r.abs();
        self.reference = Some(r);
        self.rel_error = Some(err);
        if let Some(t) = tolerance {
            self.tolerance = Some(t);
            self.status = if err <= t { Status::Pass } else { Status::Fail };
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub latency_mode: String,
    /// Seconds since the Unix epoch; omitted for deterministic output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(latency_mode: impl Into<String>, rows: Vec<ReportRow>) -> Self {
        Report { schema_version: REPORT_SCHEMA_VERSION, latency_mode: latency_mode.into(), generated_at: None, rows }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

pub fn to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn to_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Report> {
    let report: Report = serde_json::from_str(text)?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(BenchError::Usage(format!("report schema_version {} is not supported", report.schema_version)));
    }
    Ok(report)
}

/// Reads rows from a CSV or JSON report, chosen by extension.
pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(from_json(&text)?.rows),
        _ => from_csv(&text),
    }
}

/// Fixed-width summary for terminals.
pub fn table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<18} {:<20} {:<17} {:>12} {:>12} {:>9}  status",
        "scenario", "architecture", "workload", "metric", "value", "reference", "rel.err"
    );
    for r in rows {
        let reference = r.reference.map(|v| format!("{v:.3e}")).unwrap_or_default();
        let err = r.rel_error.map(|e| format!("{:.2}%", e * 100.0)).unwrap_or_default();
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Info => "",
        };
        let _ = writeln!(
            out,
            "{:<8} {:<18} {:<20} {:<17} {:>12.4e} {:>12} {:>9}  {status}",
            r.scenario, r.architecture, r.workload, r.metric, r.value, reference, err
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_sets_status() {
        let r = ReportRow::new("s", "fig3", "memristive", "add", "throughput", 101.0);
        let pass = r.clone().compare(Some(100.0), Some(0.01));
        assert_eq!(pass.status, Status::Pass);
        assert!((pass.rel_error.unwrap() - 0.01).abs() < 1e-12);
        assert_eq!(r.clone().compare(Some(100.0), Some(0.005)).status, Status::Fail);
        assert_eq!(r.clone().compare(Some(100.0), None).status, Status::Info);
        assert_eq!(r.clone().compare(None, Some(0.01)).reference, None);
    }
}
