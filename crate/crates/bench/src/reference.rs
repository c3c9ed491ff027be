//! Plotted figure values, stored as CSV with a SHA-256 line over the body.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

const BUNDLED: &str = include_str!("../data/reference.csv");
const CHECKSUM_PREFIX: &str = "# sha256=";
const HEADER: &str = "figure,series,label,metric,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| BenchError::Reference(format!("unknown figure '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Throughput,
    EnergyEff,
    Ratio,
    Cc,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Throughput => "throughput",
            Metric::EnergyEff => "energy_eff",
            Metric::Ratio => "ratio",
            Metric::Cc => "cc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub figure: Figure,
    pub series: String,
    pub label: String,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub checksum: String,
    pub records: Vec<ReferenceRecord>,
}

pub fn checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

impl ReferenceSet {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled reference data is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the checksum line and the CSV body, rejecting any edit that
    /// does not update the checksum.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.replace("\r\n", "\n");
        let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
        let expected = first
            .strip_prefix(CHECKSUM_PREFIX)
            .ok_or_else(|| BenchError::Reference(format!("first line must be '{CHECKSUM_PREFIX}<hex>'")))?
            .trim();
        let actual = checksum(body);
        if expected != actual {
            return Err(BenchError::Reference(format!(
                "checksum mismatch: file says {expected}, body hashes to {actual}"
            )));
        }
        if body.lines().next() != Some(HEADER) {
            return Err(BenchError::Reference(format!("expected header '{HEADER}'")));
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ReferenceRecord>, _>>()
            .map_err(|e| BenchError::Reference(e.to_string()))?;
        let set = ReferenceSet { checksum: actual, records };
        set.validate()?;
        Ok(set)
    }

    /// Writes records with a fresh checksum line.
    pub fn render(records: &[ReferenceRecord]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Reference(e.to_string()))?;
        let body = String::from_utf8(bytes).expect("csv output is utf-8");
        Ok(format!("{CHECKSUM_PREFIX}{}\n{body}", checksum(&body)))
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.records {
            if !(r.value.is_finite() && r.value > 0.0) {
                return Err(BenchError::Reference(format!(
                    "{} {} {}: value must be positive",
                    r.figure, r.series, r.label
                )));
            }
            if !seen.insert((r.figure, &r.series, &r.label, r.metric)) {
                return Err(BenchError::Reference(format!(
                    "duplicate record {} {} {} {}",
                    r.figure,
                    r.series,
                    r.label,
                    r.metric.as_str()
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, figure: Figure, series: &str, label: &str, metric: Metric) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.figure == figure && r.series == series && r.label == label && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn figure(&self, figure: Figure) -> impl Iterator<Item = &ReferenceRecord> {
        self.records.iter().filter(move |r| r.figure == figure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_is_complete() {
        let set = ReferenceSet::bundled();
        assert_eq!(set.records.len(), 112);
        for fig in Figure::ALL {
            assert!(set.figure(fig).count() > 0);
        }
        assert_eq!(set.get(Figure::Fig3, "memristive", "add", Metric::Throughput), Some(2.33e14));
        assert_eq!(set.get(Figure::Fig4, "dram", "mult16", Metric::Ratio), Some(0.359));
    }

    #[test]
    fn render_round_trip() {
        let set = ReferenceSet::bundled();
        let text = ReferenceSet::render(&set.records).unwrap();
        assert_eq!(ReferenceSet::parse(&text).unwrap().records, set.records);
    }

    #[test]
    fn tampering_is_detected() {
        let edited = BUNDLED.replacen("2.33e14", "2.34e14", 1);
        assert!(matches!(ReferenceSet::parse(&edited), Err(BenchError::Reference(_))));
        let stripped = BUNDLED.split_once('\n').unwrap().1;
        assert!(ReferenceSet::parse(stripped).is_err());
    }
}
