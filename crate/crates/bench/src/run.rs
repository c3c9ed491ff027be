//! Evaluates scenarios into report rows.

use std::sync::OnceLock;

use dpim_core::archmodel::{
    closed_form_ratio, gpu_membound_perf, gpu_peak_perf, improvement_ratio, io_bytes, pim_vector_perf, GpuArch,
    PerfResult, PimArch,
};
use dpim_core::kernels::{LatencyMode, LatencyTable};
use dpim_core::workloads::{
    cnn_gpu_peak, cnn_perf, conv_perf, data_reuse, matmul_gpu_peak, matmul_perf, model_elements, model_macs,
    CnnModel, ConvWorkload, MatmulWorkload, Workload,
};
use dpim_core::NumberFormat;

use crate::config::{model_key, parse_kernel, Benchmark, Config, KernelPoint, MacSource, Scenario};
use crate::error::Result;
use crate::reference::{Figure, Metric, ReferenceSet};
use crate::report::ReportRow;

/// Series names for GPU rows.
pub const GPU_PEAK: &str = "gpu-peak";
pub const GPU_MEMBOUND: &str = "gpu-membound";
/// Reference series the memory-bound model is compared against.
pub const GPU_EXPERIMENTAL: &str = "gpu-experimental";

/// Matmul, convolution and CNN workloads run in single precision.
const WORKLOAD_FORMAT: NumberFormat = NumberFormat::SINGLE;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub latency_mode: Option<LatencyMode>,
    pub eta: Option<f64>,
}

pub struct Runner {
    pub config: Config,
    pub reference: ReferenceSet,
    pub overrides: Overrides,
    measured: OnceLock<LatencyTable>,
}

impl Runner {
    pub fn new(config: Config, reference: ReferenceSet, overrides: Overrides) -> Self {
        Runner { config, reference, overrides, measured: OnceLock::new() }
    }

    pub fn bundled() -> Self {
        Self::new(Config::bundled(), ReferenceSet::bundled(), Overrides::default())
    }

    pub fn mode(&self, s: &Scenario) -> LatencyMode {
        self.overrides.latency_mode.or(s.latency_mode).unwrap_or_default()
    }

    pub fn latencies(&self, mode: LatencyMode) -> Result<&LatencyTable> {
        Ok(match mode {
            LatencyMode::Calibrated => &self.config.calibrated_latencies,
            LatencyMode::Measured => {
                if self.measured.get().is_none() {
                    let _ = self.measured.set(LatencyTable::measured()?);
                }
                self.measured.get().expect("initialized above")
            }
        })
    }

    fn gpu(&self, s: &Scenario) -> Result<GpuArch> {
        let gpu = self.config.gpu(&s.gpu)?.clone();
        match self.overrides.eta.or(s.eta) {
            Some(eta) => Ok(gpu.with_eta(eta)?),
            None => Ok(gpu),
        }
    }

    fn archs(&self, s: &Scenario) -> Result<Vec<&PimArch>> {
        s.architectures.iter().map(|a| self.config.arch(a)).collect()
    }

    pub fn run_all(&self) -> Result<Vec<ReportRow>> {
        let mut rows = Vec::new();
        for s in &self.config.scenarios {
            rows.extend(self.run(s)?);
        }
        Ok(rows)
    }

    pub fn run_named(&self, name: &str) -> Result<Vec<ReportRow>> {
        self.run(self.config.scenario(name)?)
    }

    pub fn run(&self, s: &Scenario) -> Result<Vec<ReportRow>> {
        let mut ctx = Ctx { runner: self, s, mode: self.mode(s), rows: Vec::new() };
        match s.benchmark {
            Benchmark::Arith => ctx.arith()?,
            Benchmark::InverseLaw => ctx.inverse_law()?,
            Benchmark::Matmul => ctx.matmul()?,
            Benchmark::Conv => ctx.conv()?,
            Benchmark::Cnn => ctx.cnn()?,
        }
        Ok(ctx.rows)
    }
}

struct Ctx<'a> {
    runner: &'a Runner,
    s: &'a Scenario,
    mode: LatencyMode,
    rows: Vec<ReportRow>,
}

impl Ctx<'_> {
    fn figure(&self) -> &str {
        self.s.figure.map(Figure::as_str).unwrap_or("")
    }

    fn reference(&self, series: &str, label: Option<&str>, metric: Metric) -> Option<f64> {
        let fig = self.s.figure?;
        self.runner.reference.get(fig, series, label?, metric)
    }

    /// Tolerance for a PIM row: the figure's bar in calibrated mode, the
    /// wider measured-mode bar otherwise.
    fn pim_tolerance(&self) -> Option<f64> {
        let t = &self.runner.config.tolerances;
        let fig = self.s.figure?;
        Some(match self.mode {
            LatencyMode::Calibrated => t.figure(fig),
            LatencyMode::Measured => t.measured,
        })
    }

    fn row(&self, arch: &str, workload: &str, metric: &str, value: f64) -> ReportRow {
        ReportRow::new(&self.s.name, self.figure(), arch, workload, metric, value)
    }

    /// Throughput and energy rows for one series.
    fn push_perf(&mut self, series: &str, workload: &str, label: Option<&str>, p: PerfResult, tol: Option<f64>) {
        for (metric, value) in [(Metric::Throughput, p.throughput), (Metric::EnergyEff, p.energy_efficiency)] {
            let r = self.reference(series, label, metric);
            let row = self.row(series, workload, metric.as_str(), value).compare(r, tol);
            self.rows.push(row);
        }
    }

    fn push_gpu_peak(&mut self, workload: &str, label: Option<&str>, p: PerfResult) {
        let tol = Some(self.runner.config.tolerances.gpu_peak);
        self.push_perf(GPU_PEAK, workload, label, p, tol);
    }

    fn latency(&self, kernel: &str) -> Result<u64> {
        Ok(self.runner.latencies(self.mode)?.get_key(kernel)?)
    }

    /// Kernel latency, checked against the calibrated table when measured.
    fn push_latency(&mut self, kernel: &str) -> Result<u64> {
        let lat = self.latency(kernel)?;
        let mut row = self.row("kernel", kernel, "latency", lat as f64);
        if self.mode == LatencyMode::Measured {
            let cal = self.runner.config.calibrated_latencies.get_key(kernel)? as f64;
            row = row.compare(Some(cal), Some(self.runner.config.tolerances.measured));
        }
        self.rows.push(row);
        Ok(lat)
    }

    fn arith(&mut self) -> Result<()> {
        let gpu = self.runner.gpu(self.s)?;
        let archs = self.runner.archs(self.s)?;
        let s = self.s;
        for KernelPoint { kernel, label } in &s.points {
            let (_, format) = parse_kernel(kernel)?;
            let label = label.as_deref();
            let lat = self.push_latency(kernel)?;
            for arch in &archs {
                let p = pim_vector_perf(arch, lat)?;
                self.push_perf(&arch.name, kernel, label, p, self.pim_tolerance());
            }
            // The memory-bound model is shown next to the measured GPU but
            // not held to it.
            let mem = gpu_membound_perf(&gpu, io_bytes(format.total_bits()))?;
            for (metric, value) in [(Metric::Throughput, mem.throughput), (Metric::EnergyEff, mem.energy_efficiency)] {
                let r = self.reference(GPU_EXPERIMENTAL, label, metric);
                let row = self.row(GPU_MEMBOUND, kernel, metric.as_str(), value).compare(r, None);
                self.rows.push(row);
            }
            self.push_gpu_peak(kernel, label, gpu_peak_perf(&gpu));
        }
        Ok(())
    }

    fn inverse_law(&mut self) -> Result<()> {
        let gpu = self.runner.gpu(self.s)?;
        let archs = self.runner.archs(self.s)?;
        let tol = self.pim_tolerance();
        let s = self.s;
        let mut lats = Vec::new();
        for p in &s.points {
            lats.push(self.push_latency(&p.kernel)?);
        }
        for arch in archs {
            let mut products = Vec::new();
            for (KernelPoint { kernel, label }, &lat) in s.points.iter().zip(&lats) {
                let (_, format) = parse_kernel(kernel)?;
                let label = label.as_deref();
                let bits = format.total_bits();
                let cc = lat as f64 / (3 * bits) as f64;
                let pim = pim_vector_perf(arch, lat)?;
                let base = gpu_membound_perf(&gpu, io_bytes(bits))?;
                let ratio = improvement_ratio(&pim, &base)?;
                products.push(cc * ratio);
                let ref_cc = self.reference(&arch.name, label, Metric::Cc);
                let ref_ratio = self.reference(&arch.name, label, Metric::Ratio);
                let ref_product = ref_cc.zip(ref_ratio).map(|(c, r)| c * r);
                for (metric, value, r) in
                    [("cc", cc, ref_cc), ("ratio", ratio, ref_ratio), ("cc_x_ratio", cc * ratio, ref_product)]
                {
                    let row = self.row(&arch.name, kernel, metric, value).compare(r, tol);
                    self.rows.push(row);
                }
            }
            let constant = closed_form_ratio(arch, &gpu, 1.0)?;
            self.rows.push(self.row(&arch.name, "closed-form", "cc_x_ratio", constant));
            // Spread of CC x ratio across kernels, as max/min.
            let max = products.iter().copied().fold(f64::MIN, f64::max);
            let min = products.iter().copied().fold(f64::MAX, f64::min);
            let spread_tol = Some(self.runner.config.tolerances.fig4);
            let row = self.row(&arch.name, "all-kernels", "cc_x_ratio_spread", max / min).compare(Some(1.0), spread_tol);
            self.rows.push(row);
        }
        Ok(())
    }

    fn matmul(&mut self) -> Result<()> {
        let gpu = self.runner.gpu(self.s)?;
        let archs = self.runner.archs(self.s)?;
        let lat = self.runner.latencies(self.mode)?.clone();
        for &n in &self.s.n {
            let label = format!("{n}x{n}");
            let w = MatmulWorkload { n, format: WORKLOAD_FORMAT };
            for arch in &archs {
                let p = matmul_perf(arch, &w, &lat)?;
                self.push_perf(&arch.name, &label, Some(&label), p, self.pim_tolerance());
            }
            self.push_gpu_peak(&label, Some(&label), matmul_gpu_peak(&gpu, &w));
            let reuse = data_reuse(Workload::Matmul { n });
            self.rows.push(self.row("-", &label, "reuse", reuse));
        }
        Ok(())
    }

    fn conv(&mut self) -> Result<()> {
        let archs = self.runner.archs(self.s)?;
        let lat = self.runner.latencies(self.mode)?.clone();
        for c in &self.s.conv {
            let label = format!("{}x{}-k{}", c.width, c.height, c.k);
            let w = ConvWorkload { width: c.width, height: c.height, k: c.k, format: WORKLOAD_FORMAT };
            for arch in &archs {
                let p = conv_perf(arch, &w, &lat)?;
                self.push_perf(&arch.name, &label, None, p, None);
            }
            self.rows.push(self.row("-", &label, "reuse", data_reuse(Workload::Conv { k: c.k })));
        }
        Ok(())
    }

    fn cnn(&mut self) -> Result<()> {
        let gpu = self.runner.gpu(self.s)?;
        let archs = self.runner.archs(self.s)?;
        let lat = self.runner.latencies(self.mode)?.clone();
        let opts = self.s.count_options();
        for name in &self.s.models {
            let label = model_key(name);
            let model = CnnModel::bundled(name)?;
            let counted = model_macs(&model, opts)?;
            let calibrated = self.runner.config.calibrated_macs(name).ok();
            let macs = match self.s.mac_source {
                MacSource::Calibrated => calibrated.expect("validated with the config"),
                MacSource::Counted => counted,
            };
            let macs_tol = Some(self.runner.config.tolerances.counted_macs);
            let row = self.row("counted", &label, "macs", counted as f64).compare(calibrated.map(|m| m as f64), macs_tol);
            self.rows.push(row);
            for arch in &archs {
                let p = cnn_perf(arch, macs, &lat, WORKLOAD_FORMAT)?;
                self.push_perf(&arch.name, &label, Some(&label), p, self.pim_tolerance());
            }
            self.push_gpu_peak(&label, Some(&label), cnn_gpu_peak(&gpu, macs));
            let elements = model_elements(&model, opts)?;
            self.rows.push(self.row("-", &label, "reuse", data_reuse(Workload::Cnn { macs: counted, elements })));
        }
        Ok(())
    }
}
