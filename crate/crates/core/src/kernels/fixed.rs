//! Fixed-point ripple-carry addition and shift-and-add multiplication.

use super::builder::{Bit, Builder};
use super::{finish, ArithOp, ColumnProgram};
use crate::error::{invalid, Result};
use crate::format::NumberFormat;

fn width(format: NumberFormat) -> Result<usize> {
    match format {
        NumberFormat::Fixed { bits, .. } if format.kernel_supported() => Ok(bits as usize),
        _ => invalid(format!("no fixed-point kernel for {format}")),
    }
}

/// `z = (u + v) mod 2^N`, one full adder per bit. The carry out of the top
/// bit is kept as a one-column auxiliary output.
///
/// The adders are emitted unfolded, so latency is exactly 18 cycles per bit
/// (nine NOR gates, each preceded by an initialization).
pub fn build_fixed_add(format: NumberFormat) -> Result<ColumnProgram> {
    let n = width(format)?;
    let mut b = Builder::new();
    let u = b.inputs(0..n);
    let v = b.inputs(n..2 * n);
    let mut carry = Bit::Zero;
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let (s, c) = b.full_add_unfolded(u[i], v[i], carry);
        z.push(s);
        carry = c;
    }
    Ok(finish(&b, ArithOp::Add, format, z, vec![carry]))
}

/// `z = (u * v) mod 2^N`. The full 2N-bit product is formed by shift-and-add;
/// its high half is kept as an N-column auxiliary output.
pub fn build_fixed_mult(format: NumberFormat) -> Result<ColumnProgram> {
    let n = width(format)?;
    let mut b = Builder::new();
    let u = b.inputs(0..n);
    let v = b.inputs(n..2 * n);
    let product = b.multiply(&u, &v);
    let (low, high) = product.split_at(n);
    Ok(finish(&b, ArithOp::Mult, format, low.to_vec(), high.to_vec()))
}

impl Builder {
    /// Unsigned `x * y` as a `x.len() + y.len()` bit word.
    pub fn multiply(&mut self, x: &[Bit], y: &[Bit]) -> Vec<Bit> {
        let n = x.len();
        let mut acc = vec![Bit::Zero; n + y.len()];
        for (j, &yj) in y.iter().enumerate() {
            let pp: Vec<Bit> = x.iter().map(|&xi| self.and(xi, yj)).collect();
            if j == 0 {
                acc[..n].copy_from_slice(&pp);
                continue;
            }
            let (s, c) = self.add(&acc[j..j + n], &pp, Bit::Zero);
            acc[j..j + n].copy_from_slice(&s);
            acc[j + n] = c;
        }
        acc
    }
}
