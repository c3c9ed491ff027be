//! Checks kernel programs against host arithmetic, bit for bit.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use half::f16;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArithOp, ColumnProgram};
use crate::bitgrid::Grid;
use crate::error::{invalid, Result};
use crate::format::NumberFormat;

/// Rows simulated per grid.
const BATCH_ROWS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Every operand pair; only for formats of at most 16 bits.
    Exhaustive,
    /// Directed edge cases plus `samples` seeded random pairs.
    Random { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub format: NumberFormat,
    pub u: u64,
    pub v: u64,
    pub expected: u64,
    pub actual: u64,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.format.total_bits() as usize;
        let d = |x: u64| self.format.decode(x);
        write!(
            f,
            "u={:0w$b} ({}) v={:0w$b} ({}): expected {:0w$b} ({}), got {:0w$b} ({})",
            self.u,
            d(self.u),
            self.v,
            d(self.v),
            self.expected,
            d(self.expected),
            self.actual,
            d(self.actual),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub kernel: String,
    pub cases: u64,
    pub mismatches: u64,
    /// Mismatch with the lowest case index.
    pub first_mismatch: Option<Mismatch>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

impl fmt::Display for Verification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} match", self.kernel, self.cases - self.mismatches, self.cases)?;
        if let Some(m) = &self.first_mismatch {
            write!(f, "; first mismatch {m}")?;
        }
        Ok(())
    }
}

fn mask(format: NumberFormat) -> u64 {
    match format.total_bits() {
        64 => u64::MAX,
        n => (1u64 << n) - 1,
    }
}

/// Expected result bits for `u op v` under IEEE-754 round-to-nearest-even or
/// modular integer arithmetic.
pub fn oracle(op: ArithOp, format: NumberFormat, u: u64, v: u64) -> u64 {
    match format {
        NumberFormat::Fixed { .. } => {
            let r = match op {
                ArithOp::Add => u.wrapping_add(v),
                ArithOp::Mult => u.wrapping_mul(v),
            };
            r & mask(format)
        }
        f if f == NumberFormat::SINGLE => {
            let (a, b) = (f32::from_bits(u as u32), f32::from_bits(v as u32));
            let r = match op {
                ArithOp::Add => a + b,
                ArithOp::Mult => a * b,
            };
            r.to_bits() as u64
        }
        f if f == NumberFormat::HALF => {
            // Sums and products of two halves are exact in f64, so this rounds once.
            let (a, b) = (f16::from_bits(u as u16).to_f64(), f16::from_bits(v as u16).to_f64());
            let r = match op {
                ArithOp::Add => a + b,
                ArithOp::Mult => a * b,
            };
            f16::from_f64(r).to_bits() as u64
        }
        _ => panic!("no oracle for {format}"),
    }
}

fn is_nan(format: NumberFormat, bits: u64) -> bool {
    format.is_float() && format.decode(bits).as_f64().is_nan()
}

fn matches(format: NumberFormat, expected: u64, actual: u64) -> bool {
    if is_nan(format, expected) {
        is_nan(format, actual)
    } else {
        expected == actual
    }
}

/// Boundary operands: zeros, subnormal and normal limits, infinities, NaNs.
pub fn edge_values(format: NumberFormat) -> Vec<u64> {
    let n = format.total_bits();
    let sign = 1u64 << (n - 1);
    let mut v = match format {
        NumberFormat::Fixed { .. } => vec![0, 1, 2, 3, mask(format), mask(format) - 1, sign, sign - 1, sign + 1],
        NumberFormat::Float { exponent_bits: e, mantissa_bits: m } => {
            let one = ((1u64 << (e - 1)) - 1) << m;
            let exp_ones = ((1u64 << e) - 1) << m;
            let frac = (1u64 << m) - 1;
            let mut v = vec![
                0,
                1,                  // smallest subnormal
                2,
                3,
                frac,               // largest subnormal
                frac - 1,
                1 << m,             // smallest normal
                (1 << m) + 1,
                one,                // 1.0
                one + 1,            // 1.0 + ulp
                one - 1,            // just below 1.0
                one | (1 << (m - 1)), // 1.5
                one - (1 << m),     // 0.5
                one + (1 << m),     // 2.0
                exp_ones - 1,       // largest finite
                exp_ones - (1 << m), // largest finite with zero fraction
                exp_ones,           // infinity
                exp_ones | (1 << (m - 1)), // quiet NaN
                exp_ones | 1,       // signaling NaN
            ];
            let pos = v.clone();
            v.extend(pos.iter().map(|x| x | sign));
            v
        }
    };
    v.sort_unstable();
    v.dedup();
    v
}

/// All pairs of edge values plus hand-picked rounding ties.
pub fn directed_pairs(op: ArithOp, format: NumberFormat) -> Vec<(u64, u64)> {
    let edges = edge_values(format);
    let mut pairs: Vec<(u64, u64)> = edges.iter().flat_map(|&a| edges.iter().map(move |&b| (a, b))).collect();
    if let NumberFormat::Float { exponent_bits: e, mantissa_bits: m } = format {
        let bias = (1u64 << (e - 1)) - 1;
        let one = bias << m;
        let pow2 = |k: i64| ((bias as i64 + k) as u64) << m;
        let sign = 1u64 << (e + m);
        match op {
            ArithOp::Add => {
                let half_ulp = pow2(-(m as i64) - 1);
                pairs.extend([
                    (one, half_ulp),            // tie, stays even
                    (one + 1, half_ulp),        // tie, rounds up to even
                    (one, half_ulp | 1),        // just above the tie
                    (one, half_ulp | sign),     // tie below 1.0 after subtraction
                    (one + 1, sign | one),      // cancellation to one ulp
                    (1 << m, sign | 1),         // normal minus subnormal
                    ((1 << m) | 1, sign | (1 << m)), // difference is subnormal
                ]);
            }
            ArithOp::Mult => {
                let onehalf = one | (1 << (m - 1));
                let half = pow2(-1);
                pairs.extend([
                    (onehalf, one + 1), // tie, odd significand rounds up
                    (3, half),          // subnormal tie: 1.5 ulp -> 2 ulp
                    (1, half),          // 0.5 ulp ties to zero
                    (5, half),          // 2.5 ulp -> 2 ulp
                    (1 << m, half),     // smallest normal halves into subnormal
                    ((1 << m) - 1, pow2(1)), // largest subnormal doubles into normal
                    (pow2(bias as i64), pow2(1)), // overflow to infinity
                ]);
            }
        }
    }
    pairs
}

fn random_pair(op: ArithOp, format: NumberFormat, rng: &mut ChaCha8Rng) -> (u64, u64) {
    let mk = mask(format);
    let (e, m) = match format {
        NumberFormat::Float { exponent_bits, mantissa_bits } => (exponent_bits, mantissa_bits),
        NumberFormat::Fixed { .. } => return (rng.gen::<u64>() & mk, rng.gen::<u64>() & mk),
    };
    let u = rng.gen::<u64>() & mk;
    let emax = (1i64 << e) - 1;
    let eu = (u >> m) as i64 & emax;
    let bias = (1i64 << (e - 1)) - 1;
    let ev = match rng.gen_range(0..10) {
        0..=3 => return (u, rng.gen::<u64>() & mk),
        // Nearby exponents exercise alignment and cancellation.
        4..=6 => eu + rng.gen_range(-2..=2),
        // Exponent sums near the underflow and overflow thresholds.
        7 | 8 => match op {
            ArithOp::Mult if rng.gen_bool(0.7) => bias - eu + rng.gen_range(-(m as i64) - 3..=2),
            ArithOp::Mult => bias + emax - 1 - eu + rng.gen_range(-2..=1),
            ArithOp::Add => rng.gen_range(0..=(m as i64) + 2),
        },
        _ => {
            let edges = edge_values(format);
            return (u, edges[rng.gen_range(0..edges.len())]);
        }
    };
    let ev = ev.clamp(0, emax) as u64;
    let frac = rng.gen::<u64>() & ((1 << m) - 1);
    let v = (rng.gen::<u64>() & 1) << (e + m) | (ev << m) | frac;
    if rng.gen_bool(0.5) {
        (u, v)
    } else {
        (v, u)
    }
}

/// Verifies a program on explicit operand pairs.
pub fn verify_pairs(program: &ColumnProgram, pairs: &[(u64, u64)]) -> Result<Verification> {
    run_cases(program, pairs.len() as u64, |i| pairs[i as usize])
}

pub fn verify_kernel(program: &ColumnProgram, sampling: Sampling) -> Result<Verification> {
    let format = program.format;
    match sampling {
        Sampling::Exhaustive => {
            let n = format.total_bits();
            if n > 16 {
                return invalid(format!("exhaustive verification of {format} is not supported"));
            }
            run_cases(program, 1u64 << (2 * n), |i| (i & mask(format), i >> n))
        }
        Sampling::Random { samples, seed } => {
            let mut pairs = directed_pairs(program.op, format);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pairs.extend((0..samples).map(|_| random_pair(program.op, format, &mut rng)));
            verify_pairs(program, &pairs)
        }
    }
}

fn run_cases(program: &ColumnProgram, total: u64, pair: impl Fn(u64) -> (u64, u64) + Sync) -> Result<Verification> {
    let batches = total.div_ceil(BATCH_ROWS as u64) as usize;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(batches.max(1));
    let next = AtomicUsize::new(0);
    let results: Vec<Result<(u64, Option<(u64, Mismatch)>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut bad = 0u64;
                    let mut first: Option<(u64, Mismatch)> = None;
                    loop {
                        let b = next.fetch_add(1, Ordering::Relaxed);
                        if b >= batches {
                            break;
                        }
                        let start = b as u64 * BATCH_ROWS as u64;
                        let end = (start + BATCH_ROWS as u64).min(total);
                        let (n, m) = run_batch(program, start, end, &pair)?;
                        bad += n;
                        if let Some(m) = m {
                            if first.as_ref().is_none_or(|(i, _)| m.0 < *i) {
                                first = Some(m);
                            }
                        }
                    }
                    Ok((bad, first))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("verification worker panicked")).collect()
    });
    let mut mismatches = 0;
    let mut first: Option<(u64, Mismatch)> = None;
    for r in results {
        let (n, m) = r?;
        mismatches += n;
        if let Some(m) = m {
            if first.as_ref().is_none_or(|(i, _)| m.0 < *i) {
                first = Some(m);
            }
        }
    }
    Ok(Verification { kernel: program.key(), cases: total, mismatches, first_mismatch: first.map(|(_, m)| m) })
}

fn run_batch(
    program: &ColumnProgram,
    start: u64,
    end: u64,
    pair: &impl Fn(u64) -> (u64, u64),
) -> Result<(u64, Option<(u64, Mismatch)>)> {
    let rows = (end - start) as usize;
    let (us, vs): (Vec<u64>, Vec<u64>) = (start..end).map(pair).unzip();
    let mut grid = Grid::new(rows, program.width(), false)?;
    grid.load_bits(&us, &program.u_layout())?;
    grid.load_bits(&vs, &program.v_layout())?;
    program.run(&mut grid)?;
    let zs = grid.read_bits(&program.z_layout())?;
    let format = program.format;
    let mut bad = 0;
    let mut first = None;
    for (i, ((&u, &v), &z)) in us.iter().zip(&vs).zip(&zs).enumerate() {
        let expected = oracle(program.op, format, u, v);
        if !matches(format, expected, z) {
            bad += 1;
            if first.is_none() {
                first = Some((start + i as u64, Mismatch { format, u, v, expected, actual: z }));
            }
        }
    }
    Ok((bad, first))
}
