//! IEEE-754 addition and multiplication with round-to-nearest-even.
//!
//! Both kernels are straight-line: every data-dependent step (operand swap,
//! alignment, normalization, special cases) is a predicated select.

use super::arith::Word;
use super::builder::{Bit, Builder};
use super::{finish, ArithOp, ColumnProgram};
use crate::error::{invalid, Result};
use crate::format::NumberFormat;

/// Number of bits needed to represent `x`.
fn bit_len(x: usize) -> usize {
    (usize::BITS - x.leading_zeros()) as usize
}

struct Unpacked {
    sign: Bit,
    frac: Word,
    exp: Word,
    /// Exponent field is zero.
    exp_zero: Bit,
    /// Exponent with subnormals mapped to 1.
    exp_eff: Word,
}

fn unpack(b: &mut Builder, x: &[Bit], e: usize, m: usize) -> Unpacked {
    let frac = x[..m].to_vec();
    let exp = x[m..m + e].to_vec();
    let exp_zero = b.nor_many(&exp);
    let mut exp_eff = exp.clone();
    exp_eff[0] = b.or(exp[0], exp_zero);
    Unpacked { sign: x[m + e], frac, exp, exp_zero, exp_eff }
}

fn widen(x: &[Bit], len: usize) -> Word {
    let mut v = x.to_vec();
    v.resize(len, Bit::Zero);
    v
}

fn dims(format: NumberFormat) -> Result<(usize, usize)> {
    match format {
        NumberFormat::Float { exponent_bits, mantissa_bits } if format.kernel_supported() => {
            Ok((exponent_bits as usize, mantissa_bits as usize))
        }
        _ => invalid(format!("no floating-point kernel for {format}")),
    }
}

/// Shared tail: rounds `frac` with guard/sticky, adds the hidden bit and the
/// rounding carry to `xexp`, and flags exponent overflow. Returns
/// `(frac, field, overflow)` where `field` has `e + 1` bits.
fn round_and_pack(
    b: &mut Builder,
    frac: &[Bit],
    hidden: Bit,
    guard: Bit,
    sticky: Bit,
    xexp: &[Bit],
    e: usize,
) -> (Word, Word, Bit) {
    let tail = b.or(sticky, frac[0]);
    let rnd = b.and(guard, tail);
    let (frac, carry) = b.increment(frac, rnd);
    let mut h = vec![Bit::Zero; e + 1];
    h[0] = hidden;
    let (field, _) = b.add(&widen(xexp, e + 1), &h, carry);
    let all_ones = b.and_many(&field[..e]);
    let ovf = b.or(field[e], all_ones);
    (frac, field, ovf)
}

/// Final masking: `kill` forces an all-ones exponent with zero fraction
/// (infinity), `nan` then sets the quiet bit, `zero` clears the exponent.
fn pack(
    b: &mut Builder,
    frac: &[Bit],
    field: &[Bit],
    sign: Bit,
    kill: Bit,
    zero: Bit,
    nan: Bit,
    e: usize,
) -> Word {
    let m = frac.len();
    let keep_frac = b.nor(kill, zero);
    let mut out: Word = frac.iter().map(|&f| b.and(f, keep_frac)).collect();
    out[m - 1] = b.or(out[m - 1], nan);
    let nz = b.not(zero);
    for &f in &field[..e] {
        let kept = b.and(f, nz);
        out.push(b.or(kept, kill));
    }
    out.push(sign);
    out
}

pub fn build_float_add(format: NumberFormat) -> Result<ColumnProgram> {
    let (e, m) = dims(format)?;
    let n = 1 + e + m;
    let p = m + 1;
    // Significand plus guard, round and sticky positions.
    let w = p + 3;
    let align_stages = bit_len(w - 1);
    let norm_stages = bit_len(w);

    let mut b = Builder::new();
    let u = b.inputs(0..n);
    let v = b.inputs(n..2 * n);

    // Order operands by magnitude so the larger one is A.
    let ge = b.geq(&u[..n - 1], &v[..n - 1]);
    let big = b.mux_word(ge, &u[..n - 1], &v[..n - 1]);
    let small = b.mux_word(ge, &v[..n - 1], &u[..n - 1]);
    let sign_a = b.mux(ge, u[n - 1], v[n - 1]);
    let sub = b.xor(u[n - 1], v[n - 1]);
    let mut big = big;
    big.push(sign_a);
    let mut small = small;
    small.push(Bit::Zero);
    let a = unpack(&mut b, &big, e, m);
    let bb = unpack(&mut b, &small, e, m);

    // Align B to A.
    let d = b.sub(&a.exp_eff, &bb.exp_eff);
    let d = b.saturate(&d, align_stages);
    let ha = b.not(a.exp_zero);
    let hb = b.not(bb.exp_zero);
    let sig_a: Word = [Bit::Zero; 3].iter().chain(&a.frac).chain([&ha]).copied().collect();
    let sig_b: Word = [Bit::Zero; 3].iter().chain(&bb.frac).chain([&hb]).copied().collect();
    let aligned = b.shift_right_sticky(&sig_b, &d);

    // Magnitude add or subtract. Subtraction cannot go negative.
    let y: Word = aligned.iter().map(|&x| b.xor(x, sub)).collect();
    let (mut t, cout) = b.add(&sig_a, &y, sub);
    let nsub = b.not(sub);
    let top = b.and(cout, nsub);
    t.push(top);
    let t_zero = b.nor_many(&t);

    // Normalize so the leading one lands on bit w, without letting the
    // exponent drop below the subnormal range.
    let limit = b.saturate(&a.exp_eff, norm_stages);
    let (t, shift) = b.normalize_left(&t, Some(&limit), norm_stages);
    let xexp = b.sub(&a.exp_eff, &widen(&shift, e));
    let sticky = b.or_many(&t[..3]);
    let (frac, field, ovf) = round_and_pack(&mut b, &t[4..4 + m], t[w], t[3], sticky, &xexp, e);

    // Special cases. NaN and infinite operands always end up in A.
    let a_ones = b.and_many(&a.exp);
    let b_ones = b.and_many(&bb.exp);
    let a_frac_nz = b.or_many(&a.frac);
    let a_nan = b.and(a_ones, a_frac_nz);
    let both_inf = b.and(a_ones, b_ones);
    let inf_diff = b.and(both_inf, sub);
    let nan = b.or(a_nan, inf_diff);
    let kill = b.or(a_ones, ovf);
    // Exact cancellation rounds to +0.
    let cancel = b.and(t_zero, sub);
    let neg_off = b.or(nan, cancel);
    let nneg = b.not(neg_off);
    let sign = b.and(a.sign, nneg);
    let z = pack(&mut b, &frac, &field, sign, kill, t_zero, nan, e);
    Ok(finish(&b, ArithOp::Add, format, z, Vec::new()))
}

pub fn build_float_mult(format: NumberFormat) -> Result<ColumnProgram> {
    let (e, m) = dims(format)?;
    let n = 1 + e + m;
    let p = m + 1;
    let lz_stages = bit_len(p - 1);
    // Window: sticky, guard, then p + 1 significand candidates.
    let rw = p + 3;
    let rshift_stages = bit_len(rw - 1);
    let wy = e + 2;

    let mut b = Builder::new();
    let u = b.inputs(0..n);
    let v = b.inputs(n..2 * n);
    let x = unpack(&mut b, &u, e, m);
    let y = unpack(&mut b, &v, e, m);
    let sign0 = b.xor(x.sign, y.sign);

    // Keep a normal significand on the left; at most the right one is
    // subnormal. Two subnormals underflow to zero regardless.
    let frac_a = b.mux_word(x.exp_zero, &y.frac, &x.frac);
    let frac_b = b.mux_word(x.exp_zero, &x.frac, &y.frac);
    let hb = b.nor(x.exp_zero, y.exp_zero);
    let mut sig_b = frac_b;
    sig_b.push(hb);
    let (mut sig_b, lz) = b.normalize_left(&sig_b, None, lz_stages);
    // Leading one after normalization, unless B is zero (masked below).
    sig_b[p - 1] = Bit::One;
    let mut sig_a = frac_a;
    sig_a.push(Bit::One);
    let prod = b.multiply(&sig_a, &sig_b);
    let top = prod[2 * p - 1];

    // y = biased result exponent - 1, two's complement over wy bits:
    // ea + eb + 1 - (lz + 2^(e-1)) - 1 + top.
    let (s1, c1) = b.add(&widen(&x.exp_eff, e + 1), &widen(&y.exp_eff, e + 1), Bit::One);
    let mut s1 = s1;
    s1.push(c1);
    let mut k = widen(&lz, wy);
    k[e - 1] = Bit::One;
    let nk = b.not_word(&k);
    let (yexp, _) = b.add(&s1, &nk, top);
    let neg = yexp[wy - 1];
    let nneg = b.not(neg);
    let xexp: Word = yexp[..e + 1].iter().map(|&bit| b.and(bit, nneg)).collect();

    // Right shift: one for a carry into the top product bit, plus the
    // subnormal denormalization distance when the exponent went negative.
    let ny = b.not_word(&yexp);
    let (dist, _) = b.add(&ny, &widen(&[top], wy), Bit::One);
    let dist = b.saturate(&dist, rshift_stages);
    let amount: Word = (0..rshift_stages)
        .map(|j| {
            let normal = if j == 0 { top } else { Bit::Zero };
            b.mux(neg, dist[j], normal)
        })
        .collect();
    let mut window = vec![b.or_many(&prod[..p - 2])];
    window.extend_from_slice(&prod[p - 2..2 * p]);
    let r = b.shift_right_sticky(&window, &amount);
    let (frac, field, ovf) = round_and_pack(&mut b, &r[2..2 + m], r[p + 1], r[1], r[0], &xexp, e);

    let x_ones = b.and_many(&x.exp);
    let y_ones = b.and_many(&y.exp);
    let x_frac_nz = b.or_many(&x.frac);
    let y_frac_nz = b.or_many(&y.frac);
    let x_nan = b.and(x_ones, x_frac_nz);
    let y_nan = b.and(y_ones, y_frac_nz);
    let x_zero = b.not(x.exp_zero);
    let x_zero = b.nor(x_zero, x_frac_nz);
    let y_zero = b.not(y.exp_zero);
    let y_zero = b.nor(y_zero, y_frac_nz);
    let x_inf = {
        let nz = b.not(x_frac_nz);
        b.and(x_ones, nz)
    };
    let y_inf = {
        let nz = b.not(y_frac_nz);
        b.and(y_ones, nz)
    };
    let inf_times_zero_a = b.and(x_inf, y_zero);
    let inf_times_zero_b = b.and(y_inf, x_zero);
    let nan_in = b.or(x_nan, y_nan);
    let nan_zero = b.or(inf_times_zero_a, inf_times_zero_b);
    let nan = b.or(nan_in, nan_zero);
    let inf_in = b.or(x_ones, y_ones);
    let tiny = b.and(x.exp_zero, y.exp_zero);
    let zero_in = b.or(x_zero, y_zero);
    let zero_any = b.or(zero_in, tiny);
    let ninf = b.not(inf_in);
    let zero = b.and(zero_any, ninf);
    let nzero = b.not(zero);
    let ovf_live = b.and(ovf, nzero);
    let kill = b.or(inf_in, ovf_live);
    let nnan = b.not(nan);
    let sign = b.and(sign0, nnan);
    let z = pack(&mut b, &frac, &field, sign, kill, zero, nan, e);
    Ok(finish(&b, ArithOp::Mult, format, z, Vec::new()))
}
