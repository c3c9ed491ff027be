//! Kernel latency tables used by the analytical models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{build, kernel_key, ArithOp};
use crate::error::{invalid, Error, Result};
use crate::format::NumberFormat;

/// Where kernel latencies come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatencyMode {
    /// Fixed table matching the reference compute-complexity points.
    #[default]
    Calibrated,
    /// Lengths of the programs built by this crate.
    Measured,
}

impl FromStr for LatencyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calibrated" => Ok(LatencyMode::Calibrated),
            "measured" => Ok(LatencyMode::Measured),
            _ => invalid(format!("unknown latency mode '{s}' (expected calibrated or measured)")),
        }
    }
}

impl fmt::Display for LatencyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LatencyMode::Calibrated => "calibrated",
            LatencyMode::Measured => "measured",
        })
    }
}

/// Cycles per kernel, keyed by [`kernel_key`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatencyTable {
    entries: BTreeMap<String, u64>,
}

/// Kernels every table provides.
pub const STANDARD_KERNELS: [(ArithOp, NumberFormat); 8] = [
    (ArithOp::Add, NumberFormat::Fixed { bits: 16, signed: false }),
    (ArithOp::Add, NumberFormat::Fixed { bits: 32, signed: false }),
    (ArithOp::Mult, NumberFormat::Fixed { bits: 16, signed: false }),
    (ArithOp::Mult, NumberFormat::Fixed { bits: 32, signed: false }),
    (ArithOp::Add, NumberFormat::HALF),
    (ArithOp::Add, NumberFormat::SINGLE),
    (ArithOp::Mult, NumberFormat::HALF),
    (ArithOp::Mult, NumberFormat::SINGLE),
];

impl LatencyTable {
    pub fn new() -> Self {
        LatencyTable { entries: BTreeMap::new() }
    }

    /// Latencies equal to compute complexity times I/O bits of the reference
    /// points, rounded to whole cycles.
    pub fn calibrated() -> Self {
        let mut t = Self::new();
        for (k, v) in [
            ("fixed-add16", 289),
            ("fixed-add32", 578),
            ("fixed-mult16", 4944),
            ("fixed-mult32", 18144),
            ("float-add-half", 1978),
            ("float-add-single", 3976),
            ("float-mult-half", 2779),
            ("float-mult-single", 11616),
        ] {
            t.entries.insert(k.to_string(), v);
        }
        t
    }

    /// Builds every standard kernel and records its program length.
    pub fn measured() -> Result<Self> {
        let mut t = Self::new();
        for (op, format) in STANDARD_KERNELS {
            let p = build(op, format)?;
            t.entries.insert(p.key(), p.latency());
        }
        Ok(t)
    }

    pub fn for_mode(mode: LatencyMode) -> Result<Self> {
        match mode {
            LatencyMode::Calibrated => Ok(Self::calibrated()),
            LatencyMode::Measured => Self::measured(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, cycles: u64) {
        self.entries.insert(key.into(), cycles);
    }

    pub fn get_key(&self, key: &str) -> Result<u64> {
        self.entries
            .get(key)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no latency for kernel '{key}'")))
    }

    pub fn get(&self, op: ArithOp, format: NumberFormat) -> Result<u64> {
        self.get_key(&kernel_key(op, format))
    }

    /// Cycles for one multiply followed by one add.
    pub fn mac(&self, format: NumberFormat) -> Result<u64> {
        Ok(self.get(ArithOp::Mult, format)? + self.get(ArithOp::Add, format)?)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl Default for LatencyTable {
    fn default() -> Self {
        Self::calibrated()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_covers_standard_kernels() {
        let t = LatencyTable::calibrated();
        for (op, f) in STANDARD_KERNELS {
            assert!(t.get(op, f).is_ok(), "{}", kernel_key(op, f));
        }
        assert_eq!(t.mac(NumberFormat::SINGLE).unwrap(), 15592);
    }

    #[test]
    fn signed_and_unsigned_share_latency() {
        let t = LatencyTable::calibrated();
        let s = NumberFormat::signed(32).unwrap();
        assert_eq!(t.get(ArithOp::Add, s).unwrap(), 578);
    }
}
