//! Architectures, calibrated constants, tolerances and scenarios.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use dpim_core::archmodel::{GpuArch, PimArch};
use dpim_core::kernels::{kernel_key, ArithOp, LatencyMode, LatencyTable, STANDARD_KERNELS};
use dpim_core::workloads::{CnnModel, CountOptions};
use dpim_core::NumberFormat;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::reference::Figure;

const BUNDLED: &str = include_str!("../data/config.json");
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Arith,
    Matmul,
    Conv,
    Cnn,
    InverseLaw,
}

/// One kernel in an arith or inverse-law scenario. `label` names the
/// reference point it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub kernel: String,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub width: u64,
    pub height: u64,
    pub k: u64,
}

/// Where CNN multiply-accumulate counts come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacSource {
    /// The per-model constants in `calibrated_macs`.
    #[default]
    Calibrated,
    /// Layer sums over the bundled model graphs.
    Counted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub benchmark: Benchmark,
    #[serde(default)]
    pub figure: Option<Figure>,
    pub architectures: Vec<String>,
    pub gpu: String,
    #[serde(default)]
    pub latency_mode: Option<LatencyMode>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub points: Vec<KernelPoint>,
    #[serde(default)]
    pub n: Vec<u64>,
    #[serde(default)]
    pub conv: Vec<ConvParams>,
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default)]
    pub mac_source: MacSource,
    #[serde(default)]
    pub include_aux: bool,
    #[serde(default = "default_true")]
    pub include_shortcuts: bool,
}

fn default_true() -> bool {
    true
}

impl Scenario {
    pub fn count_options(&self) -> CountOptions {
        CountOptions { include_aux: self.include_aux, include_shortcuts: self.include_shortcuts }
    }
}

/// Relative tolerances used to mark report rows pass or fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub fig3: f64,
    pub fig4: f64,
    pub fig5: f64,
    pub fig6: f64,
    pub gpu_peak: f64,
    /// Any PIM comparison made with measured latencies.
    pub measured: f64,
    pub counted_macs: f64,
}

impl Tolerances {
    pub fn figure(&self, f: Figure) -> f64 {
        match f {
            Figure::Fig3 => self.fig3,
            Figure::Fig4 => self.fig4,
            Figure::Fig5 => self.fig5,
            Figure::Fig6 => self.fig6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub schema_version: u32,
    pub architectures: Vec<PimArch>,
    pub gpu: Vec<GpuArch>,
    pub calibrated_latencies: LatencyTable,
    pub calibrated_macs: BTreeMap<String, u64>,
    pub tolerances: Tolerances,
    pub scenarios: Vec<Scenario>,
}

/// Lower-case model name without separators: `ResNet-50` becomes `resnet50`.
pub fn model_key(name: &str) -> String {
    name.to_ascii_lowercase().replace(['-', '_'], "")
}

/// Inverse of [`kernel_key`] over the standard kernels.
pub fn parse_kernel(key: &str) -> Result<(ArithOp, NumberFormat)> {
    STANDARD_KERNELS
        .iter()
        .copied()
        .find(|&(op, f)| kernel_key(op, f) == key)
        .ok_or_else(|| BenchError::Config(format!("unknown kernel '{key}'")))
}

impl Config {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled config is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Config = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn arch(&self, name: &str) -> Result<&PimArch> {
        self.architectures
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| BenchError::Config(format!("unknown architecture '{name}'")))
    }

    pub fn gpu(&self, name: &str) -> Result<&GpuArch> {
        self.gpu
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| BenchError::Config(format!("unknown GPU '{name}'")))
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| BenchError::Config(format!("unknown scenario '{name}'")))
    }

    pub fn calibrated_macs(&self, model: &str) -> Result<u64> {
        self.calibrated_macs
            .get(&model_key(model))
            .copied()
            .ok_or_else(|| BenchError::Config(format!("no calibrated MAC count for '{model}'")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(BenchError::Config(format!(
                "schema_version {} is not {CONFIG_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let mut names = HashSet::new();
        for a in &self.architectures {
            a.validate()?;
            if !names.insert(&a.name) {
                return Err(BenchError::Config(format!("duplicate architecture '{}'", a.name)));
            }
        }
        for g in &self.gpu {
            g.validate()?;
        }
        for (op, f) in STANDARD_KERNELS {
            let key = kernel_key(op, f);
            if self.calibrated_latencies.get_key(&key).is_err() {
                return Err(BenchError::Config(format!("calibrated_latencies lacks '{key}'")));
            }
        }
        let mut scenario_names = HashSet::new();
        for s in &self.scenarios {
            if !scenario_names.insert(&s.name) {
                return Err(BenchError::Config(format!("duplicate scenario '{}'", s.name)));
            }
            self.validate_scenario(s)?;
        }
        Ok(())
    }

    fn validate_scenario(&self, s: &Scenario) -> Result<()> {
        let ctx = |e: BenchError| BenchError::Config(format!("scenario '{}': {e}", s.name));
        for a in &s.architectures {
            self.arch(a).map_err(ctx)?;
        }
        self.gpu(&s.gpu).map_err(ctx)?;
        if let Some(eta) = s.eta {
            self.gpu(&s.gpu)?.clone().with_eta(eta).map_err(|e| ctx(e.into()))?;
        }
        let empty = match s.benchmark {
            Benchmark::Arith | Benchmark::InverseLaw => s.points.is_empty(),
            Benchmark::Matmul => s.n.is_empty(),
            Benchmark::Conv => s.conv.is_empty(),
            Benchmark::Cnn => s.models.is_empty(),
        };
        if empty {
            return Err(ctx(BenchError::Config("no workload points".into())));
        }
        for p in &s.points {
            parse_kernel(&p.kernel).map_err(ctx)?;
        }
        for m in &s.models {
            CnnModel::bundled(m).map_err(|e| ctx(e.into()))?;
            if s.mac_source == MacSource::Calibrated {
                self.calibrated_macs(m).map_err(ctx)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_matches_presets() {
        let c = Config::bundled();
        assert_eq!(c.arch("memristive").unwrap(), &PimArch::memristive());
        assert_eq!(c.arch("dram").unwrap(), &PimArch::dram());
        assert_eq!(c.gpu("a6000").unwrap(), &GpuArch::a6000());
        assert_eq!(c.calibrated_latencies, LatencyTable::calibrated());
    }

    #[test]
    fn unresolved_names_are_rejected() {
        let text = BUNDLED.replacen("\"gpu\": \"a6000\"", "\"gpu\": \"h100\"", 1);
        assert!(matches!(Config::parse(&text), Err(BenchError::Config(_))));
        let text = BUNDLED.replacen("\"architectures\": [\"memristive\"", "\"architectures\": [\"sram\"", 1);
        assert!(Config::parse(&text).is_err());
        let text = BUNDLED.replacen("fixed-add32\", \"label\": \"add\"", "fixed-add31\", \"label\": \"add\"", 1);
        assert!(Config::parse(&text).is_err());
    }

    #[test]
    fn kernel_keys_parse() {
        assert_eq!(parse_kernel("float-mult-half").unwrap(), (ArithOp::Mult, NumberFormat::HALF));
        assert!(parse_kernel("fixed-add8").is_err());
    }
}
