//! Matrix multiplication, convolution and CNN inference models, plus CNN
//! layer accounting from bundled model graphs.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archmodel::{GpuArch, PerfResult, PimArch};
use crate::error::{invalid, Error, Result};
use crate::format::NumberFormat;
use crate::kernels::LatencyTable;

/// Batched `n x n` matrix multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatmulWorkload {
    pub n: u64,
    pub format: NumberFormat,
}

/// `k x k` convolution over a `width x height` image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvWorkload {
    pub width: u64,
    pub height: u64,
    pub k: u64,
    pub format: NumberFormat,
}

fn too_large(needed: u128, available: u64) -> Error {
    Error::WorkloadTooLarge { needed, available }
}

/// One matrix element per row; each matmul is `n` serial multiply-add steps
/// over its `n^2` rows.
pub fn matmul_perf(arch: &PimArch, w: &MatmulWorkload, latencies: &LatencyTable) -> Result<PerfResult> {
    if w.n == 0 {
        return invalid("matrix dimension must be positive");
    }
    let d = arch.derive()?;
    let rows = w.n as u128 * w.n as u128;
    if rows > d.total_rows as u128 {
        return Err(too_large(rows, d.total_rows));
    }
    let units = d.total_rows as u128 / rows;
    let cycles = w.n * latencies.mac(w.format)?;
    Ok(PerfResult::new(units as f64 * arch.clock / cycles as f64, d.max_power))
}

/// Compute-bound GPU: two operations per multiply-accumulate.
pub fn matmul_gpu_peak(gpu: &GpuArch, w: &MatmulWorkload) -> PerfResult {
    let n = w.n as f64;
    PerfResult::new(gpu.peak_flops / (2.0 * n * n * n), gpu.max_power)
}

/// One output pixel per row; `k^2` serial multiply-add steps per image.
pub fn conv_perf(arch: &PimArch, w: &ConvWorkload, latencies: &LatencyTable) -> Result<PerfResult> {
    if w.k == 0 || w.width < w.k || w.height < w.k {
        return invalid(format!("invalid convolution {}x{} with k={}", w.width, w.height, w.k));
    }
    let d = arch.derive()?;
    let rows = w.width as u128 * w.height as u128;
    if rows > d.total_rows as u128 {
        return Err(too_large(rows, d.total_rows));
    }
    let units = d.total_rows as u128 / rows;
    let cycles = w.k * w.k * latencies.mac(w.format)?;
    Ok(PerfResult::new(units as f64 * arch.clock / cycles as f64, d.max_power))
}

/// A layer that performs multiply-accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv2d {
        in_channels: u64,
        out_channels: u64,
        kernel_h: u64,
        kernel_w: u64,
        stride: u64,
        padding: u64,
        input_h: u64,
        input_w: u64,
    },
    Linear {
        in_features: u64,
        out_features: u64,
    },
}

fn conv_out(input: u64, kernel: u64, stride: u64, padding: u64) -> Result<u64> {
    if stride == 0 || kernel == 0 {
        return invalid("kernel and stride must be positive");
    }
    let span = input + 2 * padding;
    if span < kernel {
        return invalid(format!("kernel {kernel} larger than padded input {span}"));
    }
    Ok((span - kernel) / stride + 1)
}

impl LayerSpec {
    /// Output `(height, width)` of a convolution; `(1, 1)` for linear layers.
    pub fn output_hw(&self) -> Result<(u64, u64)> {
        match *self {
            LayerSpec::Conv2d { kernel_h, kernel_w, stride, padding, input_h, input_w, .. } => Ok((
                conv_out(input_h, kernel_h, stride, padding)?,
                conv_out(input_w, kernel_w, stride, padding)?,
            )),
            LayerSpec::Linear { .. } => Ok((1, 1)),
        }
    }

    pub fn weights(&self) -> u64 {
        match *self {
            LayerSpec::Conv2d { in_channels, out_channels, kernel_h, kernel_w, .. } => {
                in_channels * out_channels * kernel_h * kernel_w
            }
            LayerSpec::Linear { in_features, out_features } => in_features * out_features,
        }
    }

    fn io_elements(&self) -> Result<u64> {
        Ok(match *self {
            LayerSpec::Conv2d { in_channels, out_channels, input_h, input_w, .. } => {
                let (oh, ow) = self.output_hw()?;
                in_channels * input_h * input_w + out_channels * oh * ow
            }
            LayerSpec::Linear { in_features, out_features } => in_features + out_features,
        })
    }
}

pub fn layer_macs(layer: &LayerSpec) -> Result<u64> {
    match *layer {
        LayerSpec::Conv2d { in_channels, out_channels, kernel_h, kernel_w, .. } => {
            if in_channels == 0 || out_channels == 0 {
                return invalid("channel counts must be positive");
            }
            let (oh, ow) = layer.output_hw()?;
            Ok(oh * ow * out_channels * in_channels * kernel_h * kernel_w)
        }
        LayerSpec::Linear { in_features, out_features } => Ok(in_features * out_features),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelLayer {
    pub name: String,
    pub spec: LayerSpec,
    /// Part of a training-only auxiliary classifier.
    pub aux: bool,
    /// Projection on a residual shortcut.
    pub shortcut: bool,
}

/// Which layers `model_macs` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountOptions {
    pub include_aux: bool,
    pub include_shortcuts: bool,
}

impl Default for CountOptions {
    /// Inference as deployed: shortcut projections on, auxiliary heads off.
    fn default() -> Self {
        CountOptions { include_aux: false, include_shortcuts: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub channels: u64,
    pub height: u64,
    pub width: u64,
}

/// The MAC-bearing layers of a CNN, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnModel {
    pub name: String,
    pub input: InputShape,
    pub layers: Vec<ModelLayer>,
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// On-disk model graph. Every node names its inputs; `"input"` is the image.
/// Shapes are inferred node by node and must agree with declared channel and
/// feature counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub name: String,
    pub input: InputShape,
    pub layers: Vec<NodeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub name: String,
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub aux: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub shortcut: bool,
    #[serde(flatten)]
    pub op: NodeOp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum NodeOp {
    Conv2d { in_channels: u64, out_channels: u64, kernel_h: u64, kernel_w: u64, stride: u64, padding: u64 },
    Linear { in_features: u64, out_features: u64 },
    Maxpool { kernel: u64, stride: u64, padding: u64, ceil_mode: bool },
    Avgpool { kernel: u64, stride: u64, padding: u64, ceil_mode: bool },
    AdaptiveAvgpool { output: [u64; 2] },
    Flatten,
    Concat,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Map { c: u64, h: u64, w: u64 },
    Flat(u64),
}

fn pool_out(input: u64, kernel: u64, stride: u64, padding: u64, ceil: bool) -> Result<u64> {
    if stride == 0 || kernel == 0 {
        return invalid("pool kernel and stride must be positive");
    }
    let span = input + 2 * padding;
    if span < kernel {
        return invalid(format!("pool window {kernel} larger than padded input {span}"));
    }
    let mut out = if ceil { (span - kernel).div_ceil(stride) + 1 } else { (span - kernel) / stride + 1 };
    // A ceil-mode window may not start inside the right padding.
    if ceil && (out - 1) * stride >= input + padding {
        out -= 1;
    }
    Ok(out)
}

impl ModelFile {
    pub fn into_model(self) -> Result<CnnModel> {
        let bad = |msg: String| Error::Model(format!("{}: {msg}", self.name));
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema version {}", self.schema_version)));
        }
        let mut shapes: HashMap<&str, Shape> = HashMap::new();
        let i = self.input;
        shapes.insert("input", Shape::Map { c: i.channels, h: i.height, w: i.width });
        let mut layers = Vec::new();
        for node in &self.layers {
            let ins = node
                .inputs
                .iter()
                .map(|n| shapes.get(n.as_str()).copied().ok_or_else(|| bad(format!("{}: unknown input '{n}'", node.name))))
                .collect::<Result<Vec<_>>>()?;
            let single = || -> Result<Shape> {
                match ins.as_slice() {
                    [s] => Ok(*s),
                    _ => Err(bad(format!("{} takes exactly one input", node.name))),
                }
            };
            let map = |s: Shape| -> Result<(u64, u64, u64)> {
                match s {
                    Shape::Map { c, h, w } => Ok((c, h, w)),
                    Shape::Flat(_) => Err(bad(format!("{} needs a feature map input", node.name))),
                }
            };
            let out = match node.op {
                NodeOp::Conv2d { in_channels, out_channels, kernel_h, kernel_w, stride, padding } => {
                    let (c, h, w) = map(single()?)?;
                    if c != in_channels {
                        return Err(bad(format!("{} expects {in_channels} channels, got {c}", node.name)));
                    }
                    let spec = LayerSpec::Conv2d {
                        in_channels,
                        out_channels,
                        kernel_h,
                        kernel_w,
                        stride,
                        padding,
                        input_h: h,
                        input_w: w,
                    };
                    let (oh, ow) = spec.output_hw().map_err(|e| bad(format!("{}: {e}", node.name)))?;
                    layers.push(ModelLayer { name: node.name.clone(), spec, aux: node.aux, shortcut: node.shortcut });
                    Shape::Map { c: out_channels, h: oh, w: ow }
                }
                NodeOp::Linear { in_features, out_features } => {
                    match single()? {
                        Shape::Flat(n) if n == in_features => {}
                        s => return Err(bad(format!("{} expects {in_features} flat features, got {s:?}", node.name))),
                    }
                    let spec = LayerSpec::Linear { in_features, out_features };
                    layers.push(ModelLayer { name: node.name.clone(), spec, aux: node.aux, shortcut: node.shortcut });
                    Shape::Flat(out_features)
                }
                NodeOp::Maxpool { kernel, stride, padding, ceil_mode }
                | NodeOp::Avgpool { kernel, stride, padding, ceil_mode } => {
                    let (c, h, w) = map(single()?)?;
                    let f = |x| pool_out(x, kernel, stride, padding, ceil_mode).map_err(|e| bad(format!("{}: {e}", node.name)));
                    Shape::Map { c, h: f(h)?, w: f(w)? }
                }
                NodeOp::AdaptiveAvgpool { output: [oh, ow] } => {
                    let (c, _, _) = map(single()?)?;
                    Shape::Map { c, h: oh, w: ow }
                }
                NodeOp::Flatten => match single()? {
                    Shape::Map { c, h, w } => Shape::Flat(c * h * w),
                    s => s,
                },
                NodeOp::Concat => {
                    let mut total = 0;
                    let mut hw = None;
                    for s in &ins {
                        let (c, h, w) = map(*s)?;
                        if hw.is_some_and(|x| x != (h, w)) {
                            return Err(bad(format!("{}: concatenated maps differ in size", node.name)));
                        }
                        hw = Some((h, w));
                        total += c;
                    }
                    let (h, w) = hw.ok_or_else(|| bad(format!("{} has no inputs", node.name)))?;
                    Shape::Map { c: total, h, w }
                }
                NodeOp::Add => {
                    let first = *ins.first().ok_or_else(|| bad(format!("{} has no inputs", node.name)))?;
                    if ins.iter().any(|s| *s != first) {
                        return Err(bad(format!("{}: summed tensors differ in shape", node.name)));
                    }
                    first
                }
            };
            if shapes.insert(node.name.as_str(), out).is_some() {
                return Err(bad(format!("duplicate node name '{}'", node.name)));
            }
        }
        Ok(CnnModel { name: self.name, input: self.input, layers })
    }
}

const BUNDLED: [(&str, &str); 3] = [
    ("alexnet", include_str!("../models/alexnet.json")),
    ("resnet50", include_str!("../models/resnet50.json")),
    ("googlenet", include_str!("../models/googlenet.json")),
];

impl CnnModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        file.into_model()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|(n, _)| *n).collect()
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace(['-', '_'], "");
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model '{name}'")))?;
        Self::from_json(text)
    }

    pub fn counted_layers(&self, opts: CountOptions) -> impl Iterator<Item = &ModelLayer> {
        self.layers
            .iter()
            .filter(move |l| (opts.include_aux || !l.aux) && (opts.include_shortcuts || !l.shortcut))
    }

    pub fn layer(&self, name: &str) -> Option<&ModelLayer> {
        self.layers.iter().find(|l| l.name == name)
    }
}

/// Sum of per-layer multiply-accumulates. Bias, normalization, pooling and
/// activations are not counted.
pub fn model_macs(model: &CnnModel, opts: CountOptions) -> Result<u64> {
    model.counted_layers(opts).map(|l| layer_macs(&l.spec)).sum()
}

/// Upper bound: every multiply-accumulate runs as one fully parallel
/// multiply-add pair.
pub fn cnn_perf(arch: &PimArch, macs: u64, latencies: &LatencyTable, format: NumberFormat) -> Result<PerfResult> {
    if macs == 0 {
        return invalid("model has no multiply-accumulates");
    }
    let d = arch.derive()?;
    let cycles = macs as f64 * latencies.mac(format)? as f64;
    Ok(PerfResult::new(d.total_rows as f64 * arch.clock / cycles, d.max_power))
}

pub fn cnn_gpu_peak(gpu: &GpuArch, macs: u64) -> PerfResult {
    PerfResult::new(gpu.peak_flops / (2.0 * macs as f64), gpu.max_power)
}

/// Workload shapes for [`data_reuse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Workload {
    Vector,
    Matmul { n: u64 },
    Conv { k: u64 },
    Cnn { macs: u64, elements: u64 },
}

/// Operations per data element, with constant factors dropped.
pub fn data_reuse(w: Workload) -> f64 {
    match w {
        Workload::Vector => 1.0,
        Workload::Matmul { n } => n as f64,
        Workload::Conv { k } => (k * k) as f64,
        Workload::Cnn { macs, elements } => macs as f64 / elements as f64,
    }
}

/// Weights plus input and output activations over the counted layers.
pub fn model_elements(model: &CnnModel, opts: CountOptions) -> Result<u64> {
    model.counted_layers(opts).map(|l| Ok(l.spec.weights() + l.spec.io_elements()?)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_shapes() {
        // 112 -> 56 with ceil mode; 7 -> 4 with ceil mode and padding 1.
        assert_eq!(pool_out(112, 3, 2, 0, true).unwrap(), 56);
        assert_eq!(pool_out(112, 3, 2, 1, false).unwrap(), 56);
        assert_eq!(pool_out(14, 2, 2, 0, true).unwrap(), 7);
        assert_eq!(pool_out(55, 3, 2, 0, false).unwrap(), 27);
    }

    #[test]
    fn rejects_channel_mismatch() {
        let text = r#"{"schema_version": 1, "name": "t", "input": {"channels": 3, "height": 8, "width": 8},
            "layers": [{"name": "c", "op": "conv2d", "inputs": ["input"], "in_channels": 4, "out_channels": 2,
                        "kernel_h": 3, "kernel_w": 3, "stride": 1, "padding": 0}]}"#;
        assert!(matches!(CnnModel::from_json(text), Err(Error::Model(_))));
    }

    #[test]
    fn rejects_unknown_input_and_bad_version() {
        let text = r#"{"schema_version": 1, "name": "t", "input": {"channels": 3, "height": 8, "width": 8},
            "layers": [{"name": "f", "op": "flatten", "inputs": ["nope"]}]}"#;
        assert!(CnnModel::from_json(text).is_err());
        let text = r#"{"schema_version": 9, "name": "t", "input": {"channels": 3, "height": 8, "width": 8}, "layers": []}"#;
        assert!(CnnModel::from_json(text).is_err());
    }
}
