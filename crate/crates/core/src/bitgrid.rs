//! Abstract crossbar: a binary matrix where each cycle applies one logic gate
//! column-wise, to every row at once.
//!
//! Cells are packed 64 rows per word, one word vector per column, so a column
//! operation is a tight loop over `rows / 64` words.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::{Number, NumberFormat};

/// Column gates available on the crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Gate {
    Init0,
    Init1,
    Not,
    Nor2,
    Nor3,
    And2,
    Or2,
}

impl Gate {
    pub const ALL: [Gate; 7] = [
        Gate::Init0,
        Gate::Init1,
        Gate::Not,
        Gate::Nor2,
        Gate::Nor3,
        Gate::And2,
        Gate::Or2,
    ];

    pub fn arity(self) -> usize {
        match self {
            Gate::Init0 | Gate::Init1 => 0,
            Gate::Not => 1,
            Gate::Nor2 | Gate::And2 | Gate::Or2 => 2,
            Gate::Nor3 => 3,
        }
    }

    /// Gates realizable with memristive stateful logic.
    pub fn is_memristive(self) -> bool {
        !matches!(self, Gate::And2 | Gate::Or2)
    }

    /// Evaluates the gate on 64 packed rows at once.
    #[inline]
    fn eval_word(self, a: u64, b: u64, c: u64) -> u64 {
        match self {
            Gate::Init0 => 0,
            Gate::Init1 => !0,
            Gate::Not => !a,
            Gate::Nor2 => !(a | b),
            Gate::Nor3 => !(a | b | c),
            Gate::And2 => a & b,
            Gate::Or2 => a | b,
        }
    }

    /// Truth-table evaluation for a single row.
    pub fn eval(self, inputs: &[bool]) -> bool {
        let w = |i: usize| if inputs.get(i).copied().unwrap_or(false) { !0 } else { 0 };
        self.eval_word(w(0), w(1), w(2)) & 1 == 1
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Gate::Init0 => "INIT0",
            Gate::Init1 => "INIT1",
            Gate::Not => "NOT",
            Gate::Nor2 => "NOR2",
            Gate::Nor3 => "NOR3",
            Gate::And2 => "AND2",
            Gate::Or2 => "OR2",
        };
        f.write_str(s)
    }
}

/// One cycle: `output <- gate(inputs...)` in every row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnOp {
    pub gate: Gate,
    pub inputs: Vec<usize>,
    pub output: usize,
}

impl ColumnOp {
    pub fn new(gate: Gate, inputs: &[usize], output: usize) -> Self {
        ColumnOp { gate, inputs: inputs.to_vec(), output }
    }

    pub fn init0(out: usize) -> Self {
        Self::new(Gate::Init0, &[], out)
    }

    pub fn init1(out: usize) -> Self {
        Self::new(Gate::Init1, &[], out)
    }

    pub fn not(a: usize, out: usize) -> Self {
        Self::new(Gate::Not, &[a], out)
    }

    pub fn nor2(a: usize, b: usize, out: usize) -> Self {
        Self::new(Gate::Nor2, &[a, b], out)
    }

    pub fn nor3(a: usize, b: usize, c: usize, out: usize) -> Self {
        Self::new(Gate::Nor3, &[a, b, c], out)
    }

    /// Checks arity, aliasing and bounds against a grid with `cols` columns.
    pub fn validate(&self, cols: usize) -> Result<()> {
        if self.inputs.len() != self.gate.arity() {
            return invalid(format!(
                "{} takes {} inputs, got {}",
                self.gate,
                self.gate.arity(),
                self.inputs.len()
            ));
        }
        if self.output >= cols {
            return invalid(format!("output column {} out of range (cols = {cols})", self.output));
        }
        for &i in &self.inputs {
            if i >= cols {
                return invalid(format!("input column {i} out of range (cols = {cols})"));
            }
            if i == self.output {
                return invalid(format!("{} output column {i} aliases an input", self.gate));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ColumnOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} c{}", self.gate, self.output)?;
        for (k, i) in self.inputs.iter().enumerate() {
            write!(f, "{}c{i}", if k == 0 { " <- " } else { ", " })?;
        }
        Ok(())
    }
}

/// Cycle accounting. Every applied op costs one cycle, initializations included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionStats {
    pub cycles: u64,
    pub gates_applied: u64,
    pub per_gate_histogram: BTreeMap<Gate, u64>,
}

impl ExecutionStats {
    fn charge(&mut self, gate: Gate) {
        self.cycles += 1;
        self.gates_applied += 1;
        *self.per_gate_histogram.entry(gate).or_default() += 1;
    }

    pub fn merge(&mut self, other: &ExecutionStats) {
        self.cycles += other.cycles;
        self.gates_applied += other.gates_applied;
        for (g, n) in &other.per_gate_histogram {
            *self.per_gate_histogram.entry(*g).or_default() += n;
        }
    }

    pub fn count(&self, gate: Gate) -> u64 {
        self.per_gate_histogram.get(&gate).copied().unwrap_or(0)
    }
}

/// Bit order of a field inside a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BitOrder {
    /// Bit 0 of the value sits in the first column of the field.
    #[default]
    LsbFirst,
    MsbFirst,
}

/// Columns holding one multi-bit field per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldLayout {
    pub columns: Range<usize>,
    pub order: BitOrder,
}

impl FieldLayout {
    pub fn new(columns: Range<usize>) -> Self {
        FieldLayout { columns, order: BitOrder::LsbFirst }
    }

    pub fn with_order(mut self, order: BitOrder) -> Self {
        self.order = order;
        self
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Column holding value bit `bit`.
    pub fn column_of(&self, bit: usize) -> usize {
        match self.order {
            BitOrder::LsbFirst => self.columns.start + bit,
            BitOrder::MsbFirst => self.columns.end - 1 - bit,
        }
    }
}

/// A `rows x cols` binary matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    words: usize,
    tail_mask: u64,
    data: Vec<Vec<u64>>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, fill: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("grid dimensions must be positive, got {rows}x{cols}"));
        }
        let words = rows.div_ceil(64);
        let tail_mask = match rows % 64 {
            0 => !0,
            r => (1u64 << r) - 1,
        };
        let mut col = vec![if fill { !0 } else { 0 }; words];
        col[words - 1] &= tail_mask;
        Ok(Grid { rows, cols, words, tail_mask, data: vec![col; cols] })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "cell ({row}, {col}) out of range");
        self.data[col][row / 64] >> (row % 64) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize, bit: bool) {
        assert!(row < self.rows && col < self.cols, "cell ({row}, {col}) out of range");
        let w = &mut self.data[col][row / 64];
        let m = 1u64 << (row % 64);
        if bit {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn column(&self, col: usize) -> Vec<bool> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn row(&self, row: usize) -> Vec<bool> {
        (0..self.cols).map(|c| self.get(row, c)).collect()
    }

    /// Executes one column op in every row. Costs exactly one cycle.
    pub fn apply(&mut self, op: &ColumnOp) -> Result<ExecutionStats> {
        let mut stats = ExecutionStats::default();
        self.apply_into(op, &mut stats)?;
        Ok(stats)
    }

    fn apply_into(&mut self, op: &ColumnOp, stats: &mut ExecutionStats) -> Result<()> {
        op.validate(self.cols)?;
        // The output column never aliases an input, so it can be taken out while
        // the inputs are borrowed.
        let mut out = std::mem::take(&mut self.data[op.output]);
        let zeros;
        let pick = |k: usize| op.inputs.get(k).map(|&c| self.data[c].as_slice());
        let (a, b, c) = match (pick(0), pick(1), pick(2)) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            (a, b, _) => {
                zeros = vec![0u64; self.words];
                let z = zeros.as_slice();
                (a.unwrap_or(z), b.unwrap_or(z), z)
            }
        };
        let g = op.gate;
        for (w, o) in out.iter_mut().enumerate() {
            *o = g.eval_word(a[w], b[w], c[w]);
        }
        out[self.words - 1] &= self.tail_mask;
        self.data[op.output] = out;
        stats.charge(g);
        Ok(())
    }

    /// Runs ops in order. On an invalid op, the ops before it stay applied and
    /// the error is returned.
    pub fn run(&mut self, ops: &[ColumnOp]) -> Result<ExecutionStats> {
        let mut stats = ExecutionStats::default();
        for op in ops {
            self.apply_into(op, &mut stats)?;
        }
        Ok(stats)
    }

    /// Writes raw bit patterns, one per row starting at row 0.
    pub fn load_bits(&mut self, values: &[u64], layout: &FieldLayout) -> Result<()> {
        self.check_layout(layout, values.len())?;
        for bit in 0..layout.width() {
            let col = &mut self.data[layout.column_of(bit)];
            for (chunk_idx, chunk) in values.chunks(64).enumerate() {
                let mut word = 0u64;
                for (i, v) in chunk.iter().enumerate() {
                    word |= (v >> bit & 1) << i;
                }
                let keep = if chunk.len() == 64 { 0 } else { !0u64 << chunk.len() };
                col[chunk_idx] = (col[chunk_idx] & keep) | word;
            }
        }
        Ok(())
    }

    /// Reads the raw bit pattern of every row.
    pub fn read_bits(&self, layout: &FieldLayout) -> Result<Vec<u64>> {
        self.check_layout(layout, 0)?;
        if layout.width() > 64 {
            return invalid("fields wider than 64 bits cannot be read as integers");
        }
        let mut out = vec![0u64; self.rows];
        for bit in 0..layout.width() {
            let col = &self.data[layout.column_of(bit)];
            for (r, v) in out.iter_mut().enumerate() {
                *v |= (col[r / 64] >> (r % 64) & 1) << bit;
            }
        }
        Ok(out)
    }

    /// Encodes `values` in `format` into rows `0..values.len()`.
    pub fn load_operands(&mut self, values: &[Number], format: NumberFormat, layout: &FieldLayout) -> Result<()> {
        self.check_format(format, layout)?;
        let raw = values.iter().map(|&v| format.encode(v)).collect::<Result<Vec<_>>>()?;
        self.load_bits(&raw, layout)
    }

    /// Decodes every row of the field.
    pub fn read_results(&self, format: NumberFormat, layout: &FieldLayout) -> Result<Vec<Number>> {
        self.check_format(format, layout)?;
        Ok(self.read_bits(layout)?.into_iter().map(|b| format.decode(b)).collect())
    }

    fn check_format(&self, format: NumberFormat, layout: &FieldLayout) -> Result<()> {
        if layout.width() != format.total_bits() as usize {
            return invalid(format!(
                "layout is {} columns wide but {format} needs {}",
                layout.width(),
                format.total_bits()
            ));
        }
        Ok(())
    }

    fn check_layout(&self, layout: &FieldLayout, n: usize) -> Result<()> {
        if layout.columns.end > self.cols || layout.columns.is_empty() {
            return invalid(format!("layout {:?} does not fit {} columns", layout.columns, self.cols));
        }
        if n > self.rows {
            return invalid(format!("{n} values do not fit {} rows", self.rows));
        }
        Ok(())
    }
}
