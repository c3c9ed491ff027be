//! Bit-serial, element-parallel arithmetic kernels.
//!
//! Each kernel is a straight-line [`ColumnProgram`]: operand `u` occupies
//! columns `[0, N)`, `v` occupies `[N, 2N)`, the result `z` is written to
//! `[2N, 3N)`, optional auxiliary outputs follow, then scratch columns.

mod arith;
mod builder;
mod fixed;
mod float;
mod latency;
mod verify;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bitgrid::{ColumnOp, ExecutionStats, FieldLayout, Gate, Grid};
use crate::error::{invalid, Error, Result};
use crate::format::NumberFormat;

pub use arith::Word;
pub use builder::{Bit, Builder, Lowered};
pub use fixed::{build_fixed_add, build_fixed_mult};
pub use float::{build_float_add, build_float_mult};
pub use latency::{LatencyMode, LatencyTable, STANDARD_KERNELS};
pub use verify::{directed_pairs, edge_values, oracle, verify_kernel, verify_pairs, Mismatch, Sampling, Verification};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Mult,
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithOp::Add => "add",
            ArithOp::Mult => "mult",
        })
    }
}

impl FromStr for ArithOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(ArithOp::Add),
            "mult" | "mul" => Ok(ArithOp::Mult),
            _ => invalid(format!("unknown operation '{s}'")),
        }
    }
}

/// Stable name of a kernel, e.g. `fixed-add32` or `float-mult-single`.
/// Signed and unsigned fixed-point share a program and a name.
pub fn kernel_key(op: ArithOp, format: NumberFormat) -> String {
    match format {
        NumberFormat::Fixed { bits, .. } => format!("fixed-{op}{bits}"),
        f if f == NumberFormat::SINGLE => format!("float-{op}-single"),
        f if f == NumberFormat::HALF => format!("float-{op}-half"),
        NumberFormat::Float { exponent_bits, mantissa_bits } => {
            format!("float-{op}-e{exponent_bits}m{mantissa_bits}")
        }
    }
}

/// A straight-line kernel over the column layout described in the module docs.
#[derive(Debug, Clone)]
pub struct ColumnProgram {
    pub op: ArithOp,
    pub format: NumberFormat,
    pub ops: Vec<ColumnOp>,
    pub u: Range<usize>,
    pub v: Range<usize>,
    pub z: Range<usize>,
    /// Extra outputs: carry out for addition, high product half for fixed multiply.
    pub aux: Range<usize>,
    pub scratch: Range<usize>,
}

impl ColumnProgram {
    pub fn latency(&self) -> u64 {
        self.ops.len() as u64
    }

    /// Columns a grid needs to run this program.
    pub fn width(&self) -> usize {
        self.scratch.end
    }

    pub fn key(&self) -> String {
        kernel_key(self.op, self.format)
    }

    pub fn u_layout(&self) -> FieldLayout {
        FieldLayout::new(self.u.clone())
    }

    pub fn v_layout(&self) -> FieldLayout {
        FieldLayout::new(self.v.clone())
    }

    pub fn z_layout(&self) -> FieldLayout {
        FieldLayout::new(self.z.clone())
    }

    pub fn run(&self, grid: &mut Grid) -> Result<ExecutionStats> {
        grid.run(&self.ops)
    }

    pub fn gate_histogram(&self) -> std::collections::BTreeMap<Gate, u64> {
        let mut h = std::collections::BTreeMap::new();
        for op in &self.ops {
            *h.entry(op.gate).or_default() += 1;
        }
        h
    }

    /// True if only NOR-family gates and initializations are used.
    pub fn is_memristive(&self) -> bool {
        self.ops.iter().all(|op| op.gate.is_memristive())
    }
}

/// Lowers a finished circuit into the standard layout.
fn finish(b: &Builder, op: ArithOp, format: NumberFormat, z: Vec<Bit>, aux: Vec<Bit>) -> ColumnProgram {
    let n = format.total_bits() as usize;
    assert_eq!(z.len(), n);
    let aux_len = aux.len();
    let mut outputs = z;
    outputs.extend(aux);
    let low = b.lower(&outputs, 2 * n);
    let scratch_start = 3 * n + aux_len;
    ColumnProgram {
        op,
        format,
        ops: low.ops,
        u: 0..n,
        v: n..2 * n,
        z: 2 * n..3 * n,
        aux: 3 * n..scratch_start,
        scratch: scratch_start..low.width.max(scratch_start),
    }
}

/// Builds the kernel for `op` on `format`.
pub fn build(op: ArithOp, format: NumberFormat) -> Result<ColumnProgram> {
    match (op, format.is_float()) {
        (ArithOp::Add, false) => build_fixed_add(format),
        (ArithOp::Mult, false) => build_fixed_mult(format),
        (ArithOp::Add, true) => build_float_add(format),
        (ArithOp::Mult, true) => build_float_mult(format),
    }
}

/// Latency and compute complexity of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub kernel: String,
    pub latency_cycles: u64,
    /// Two N-bit inputs and one N-bit output.
    pub io_bits: u64,
    /// Gates per input/output bit, exact.
    #[serde(with = "ratio_serde")]
    pub cc: Ratio<u64>,
    pub verified: bool,
    pub samples: u64,
}

impl KernelReport {
    pub fn cc_f64(&self) -> f64 {
        *self.cc.numer() as f64 / *self.cc.denom() as f64
    }

    pub fn with_verification(mut self, v: &Verification) -> Self {
        self.verified = v.passed();
        self.samples = v.cases;
        self
    }
}

pub fn compute_complexity(latency: u64, format: NumberFormat) -> Ratio<u64> {
    Ratio::new(latency, 3 * format.total_bits() as u64)
}

pub fn measure(program: &ColumnProgram) -> KernelReport {
    let io_bits = 3 * program.format.total_bits() as u64;
    KernelReport {
        kernel: program.key(),
        latency_cycles: program.latency(),
        io_bits,
        cc: Ratio::new(program.latency(), io_bits),
        verified: false,
        samples: 0,
    }
}

mod ratio_serde {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        [*r.numer(), *r.denom()].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let [n, m] = <[u64; 2]>::deserialize(d)?;
        if m == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(n, m))
    }
}
