//! Hardware parameters and the closed-form PIM and GPU performance models.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const GIB: u64 = 1 << 30;

/// A digital PIM memory built from identical crossbars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PimArch {
    pub name: String,
    pub crossbar_rows: u64,
    pub crossbar_cols: u64,
    pub memory_bytes: u64,
    /// Joules per gate per row.
    pub gate_energy: f64,
    /// Hertz.
    pub clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PimDerived {
    pub num_crossbars: u64,
    /// R: rows across the whole memory.
    pub total_rows: u64,
    /// Watts with every row switching every cycle.
    pub max_power: f64,
}

impl PimArch {
    /// Memristive crossbars: 1024x1024, 48 GiB, 6.4 fJ per gate, 333 MHz.
    pub fn memristive() -> Self {
        PimArch {
            name: "memristive".into(),
            crossbar_rows: 1024,
            crossbar_cols: 1024,
            memory_bytes: 48 * GIB,
            gate_energy: 6.4e-15,
            clock: 333e6,
        }
    }

    /// DRAM subarrays: 65536x1024, 48 GiB, 391 fJ per gate, 0.5 MHz.
    pub fn dram() -> Self {
        PimArch {
            name: "dram".into(),
            crossbar_rows: 65536,
            crossbar_cols: 1024,
            memory_bytes: 48 * GIB,
            gate_energy: 391e-15,
            clock: 0.5e6,
        }
    }

    pub fn presets() -> Vec<PimArch> {
        vec![Self::memristive(), Self::dram()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.crossbar_rows == 0 || self.crossbar_cols == 0 || self.memory_bytes == 0 {
            return invalid(format!("{}: crossbar dimensions and memory size must be positive", self.name));
        }
        if !(self.gate_energy > 0.0 && self.gate_energy.is_finite() && self.clock > 0.0 && self.clock.is_finite()) {
            return invalid(format!("{}: gate energy and clock must be positive", self.name));
        }
        let cells = self.crossbar_rows as u128 * self.crossbar_cols as u128;
        if !(self.memory_bytes as u128 * 8).is_multiple_of(cells) {
            return invalid(format!(
                "{}: {} bytes is not a whole number of {}x{} crossbars",
                self.name, self.memory_bytes, self.crossbar_rows, self.crossbar_cols
            ));
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<PimDerived> {
        self.validate()?;
        let cells = self.crossbar_rows as u128 * self.crossbar_cols as u128;
        let num_crossbars = (self.memory_bytes as u128 * 8 / cells) as u64;
        let total_rows = num_crossbars * self.crossbar_rows;
        Ok(PimDerived {
            num_crossbars,
            total_rows,
            max_power: total_rows as f64 * self.gate_energy * self.clock,
        })
    }
}

/// A GPU described by its datasheet numbers plus a measured bandwidth efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpuArch {
    pub name: String,
    pub cores: u64,
    pub memory_bytes: u64,
    /// Bytes per second.
    pub bandwidth: f64,
    pub clock: f64,
    pub max_power: f64,
    /// Operations per second.
    pub peak_flops: f64,
    /// Fraction of datasheet bandwidth achieved by streaming kernels.
    pub bandwidth_efficiency: f64,
}

impl GpuArch {
    /// Bandwidth efficiency that reproduces 5.74e10 32-bit element ops per
    /// second against the 768 GB/s datasheet bandwidth.
    pub const DEFAULT_ETA: f64 = 0.897;

    pub fn a6000() -> Self {
        GpuArch {
            name: "a6000".into(),
            cores: 10752,
            memory_bytes: 48 * GIB,
            bandwidth: 768e9,
            clock: 1410e6,
            max_power: 300.0,
            peak_flops: 3.87e13,
            bandwidth_efficiency: Self::DEFAULT_ETA,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.bandwidth_efficiency = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.bandwidth_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return invalid(format!("{}: bandwidth efficiency {eta} outside (0, 1]", self.name));
        }
        if !(self.bandwidth > 0.0 && self.max_power > 0.0 && self.peak_flops >= 0.0) {
            return invalid(format!("{}: bandwidth and power must be positive", self.name));
        }
        Ok(())
    }
}

/// Throughput in operations per second, power in watts, and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfResult {
    pub throughput: f64,
    pub power: f64,
    pub energy_efficiency: f64,
}

impl PerfResult {
    pub fn new(throughput: f64, power: f64) -> Self {
        PerfResult { throughput, power, energy_efficiency: throughput / power }
    }

    /// Same power, throughput divided by `work` (e.g. operations per matmul).
    pub fn per(self, work: f64) -> Self {
        Self::new(self.throughput / work, self.power)
    }
}

pub fn derive(arch: &PimArch) -> Result<PimDerived> {
    arch.derive()
}

/// Element-parallel vector kernel of `latency_cycles` on every row at once.
pub fn pim_vector_perf(arch: &PimArch, latency_cycles: u64) -> Result<PerfResult> {
    if latency_cycles == 0 {
        return invalid("kernel latency must be at least one cycle");
    }
    let d = arch.derive()?;
    let throughput = d.total_rows as f64 * arch.clock / latency_cycles as f64;
    Ok(PerfResult::new(throughput, d.max_power))
}

/// Streaming two-in/one-out kernel bounded by memory bandwidth.
pub fn gpu_membound_perf(gpu: &GpuArch, bytes_per_element_op: f64) -> Result<PerfResult> {
    if !(bytes_per_element_op > 0.0) {
        return invalid("bytes per element operation must be positive");
    }
    let throughput = gpu.bandwidth_efficiency * gpu.bandwidth / bytes_per_element_op;
    Ok(PerfResult::new(throughput, gpu.max_power))
}

/// Bytes moved per element for two N-bit inputs and one N-bit output.
pub fn io_bytes(bits: u32) -> f64 {
    3.0 * bits as f64 / 8.0
}

pub fn gpu_peak_perf(gpu: &GpuArch) -> PerfResult {
    PerfResult::new(gpu.peak_flops, gpu.max_power)
}

pub fn improvement_ratio(pim: &PerfResult, gpu: &PerfResult) -> Result<f64> {
    if !(gpu.throughput > 0.0) {
        return invalid("baseline throughput must be positive");
    }
    Ok(pim.throughput / gpu.throughput)
}

/// `R f / (8 eta B CC)`: the PIM-over-memory-bound-GPU ratio for a kernel of
/// compute complexity `cc`.
pub fn closed_form_ratio(arch: &PimArch, gpu: &GpuArch, cc: f64) -> Result<f64> {
    let d = arch.derive()?;
    Ok(d.total_rows as f64 * arch.clock / (8.0 * gpu.bandwidth_efficiency * gpu.bandwidth * cc))
}
