//! Word-level circuits over LSB-first bit vectors.

use super::builder::{Bit, Builder};

pub type Word = Vec<Bit>;

impl Builder {
    pub fn not_word(&mut self, x: &[Bit]) -> Word {
        x.iter().map(|&b| self.not(b)).collect()
    }

    pub fn mux_word(&mut self, s: Bit, a: &[Bit], b: &[Bit]) -> Word {
        a.iter().zip(b).map(|(&x, &y)| self.mux(s, x, y)).collect()
    }

    /// `x & !mask` bitwise.
    pub fn clear_word(&mut self, x: &[Bit], mask: Bit) -> Word {
        let nm = self.not(mask);
        x.iter().map(|&b| self.and(b, nm)).collect()
    }

    /// Ripple-carry sum of equal-width words; returns `(sum, carry_out)`.
    pub fn add(&mut self, x: &[Bit], y: &[Bit], cin: Bit) -> (Word, Bit) {
        assert_eq!(x.len(), y.len());
        let mut c = cin;
        let mut s = Vec::with_capacity(x.len());
        for (&a, &b) in x.iter().zip(y) {
            let (sum, carry) = self.full_add(a, b, c);
            s.push(sum);
            c = carry;
        }
        (s, c)
    }

    /// `x - y` modulo `2^len`.
    pub fn sub(&mut self, x: &[Bit], y: &[Bit]) -> Word {
        let ny = self.not_word(y);
        self.add(x, &ny, Bit::One).0
    }

    /// Unsigned `x >= y`.
    pub fn geq(&mut self, x: &[Bit], y: &[Bit]) -> Bit {
        assert_eq!(x.len(), y.len());
        // Complement of the borrow out of x - y.
        let mut no_borrow = Bit::One;
        for (&a, &b) in x.iter().zip(y) {
            let nb = self.not(b);
            no_borrow = self.maj(a, nb, no_borrow);
        }
        no_borrow
    }

    /// Clamps an unsigned amount to `stages` bits: values at or above
    /// `2^stages` become all ones.
    pub fn saturate(&mut self, x: &[Bit], stages: usize) -> Word {
        if x.len() <= stages {
            let mut v = x.to_vec();
            v.resize(stages, Bit::Zero);
            return v;
        }
        let high = self.or_many(&x[stages..]);
        x[..stages].iter().map(|&b| self.or(b, high)).collect()
    }

    /// Logical right shift by `amount` (LSB-first bits, one stage per bit).
    /// Bits shifted out are ORed into bit 0, which acts as a sticky bit.
    pub fn shift_right_sticky(&mut self, x: &[Bit], amount: &[Bit]) -> Word {
        let w = x.len();
        let mut cur = x.to_vec();
        for (j, &s) in amount.iter().enumerate() {
            let k = 1usize << j;
            let mut next = Vec::with_capacity(w);
            let lost = self.or_many(&cur[..(k + 1).min(w)]);
            next.push(self.mux(s, lost, cur[0]));
            for i in 1..w {
                let from = cur.get(i + k).copied().unwrap_or(Bit::Zero);
                next.push(self.mux(s, from, cur[i]));
            }
            cur = next;
        }
        cur
    }

    /// Shifts left by `min(leading_zeros(x), limit)` with a greedy MSB-first
    /// search over `stages` power-of-two steps. `limit` has `stages` bits;
    /// `None` means unlimited. Returns the shifted word and the shift amount.
    pub fn normalize_left(&mut self, x: &[Bit], limit: Option<&[Bit]>, stages: usize) -> (Word, Word) {
        let w = x.len();
        let mut cur = x.to_vec();
        let mut amount = vec![Bit::Zero; stages];
        // True while the shift chosen so far equals the high bits of the limit.
        let mut tight = Bit::One;
        for j in (0..stages).rev() {
            let k = 1usize << j;
            if k > w {
                continue;
            }
            let top_zero = self.nor_many(&cur[w - k..]);
            let cond = match limit {
                None => top_zero,
                Some(lim) => {
                    let nt = self.not(tight);
                    let allow = self.or(nt, lim[j]);
                    let cond = self.and(top_zero, allow);
                    let nlim = self.not(lim[j]);
                    let keep = self.or(cond, nlim);
                    tight = self.and(tight, keep);
                    cond
                }
            };
            amount[j] = cond;
            let mut next = Vec::with_capacity(w);
            for i in 0..w {
                let from = if i >= k { cur[i - k] } else { Bit::Zero };
                next.push(self.mux(cond, from, cur[i]));
            }
            cur = next;
        }
        (cur, amount)
    }

    /// Adds the single bit `inc` to `x`; returns `(sum, carry_out)`.
    pub fn increment(&mut self, x: &[Bit], inc: Bit) -> (Word, Bit) {
        let zeros = vec![Bit::Zero; x.len()];
        self.add(x, &zeros, inc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitgrid::{FieldLayout, Grid};

    /// Runs a circuit over every combination of `bits` input bits.
    fn exhaustive(bits: usize, build: impl Fn(&mut Builder, &[Bit]) -> Vec<Bit>) -> Vec<u64> {
        let mut b = Builder::new();
        let ins = b.inputs(0..bits);
        let outs = build(&mut b, &ins);
        let low = b.lower(&outs, bits);
        let rows = 1usize << bits;
        let mut g = Grid::new(rows, low.width, false).unwrap();
        g.load_bits(&(0..rows as u64).collect::<Vec<_>>(), &FieldLayout::new(0..bits)).unwrap();
        g.run(&low.ops).unwrap();
        g.read_bits(&FieldLayout::new(bits..bits + outs.len())).unwrap()
    }

    #[test]
    fn adder_and_comparator() {
        let got = exhaustive(8, |b, i| {
            let (mut s, c) = b.add(&i[..4], &i[4..], Bit::Zero);
            s.push(c);
            s.push(b.geq(&i[..4], &i[4..]));
            s.extend(b.sub(&i[..4], &i[4..]));
            s
        });
        for (r, v) in got.iter().enumerate() {
            let (x, y) = (r as u64 & 15, r as u64 >> 4);
            assert_eq!(v & 31, x + y);
            assert_eq!(v >> 5 & 1, (x >= y) as u64);
            assert_eq!(v >> 6, x.wrapping_sub(y) & 15);
        }
    }

    #[test]
    fn sticky_right_shift() {
        // 8-bit value, 3-bit shift amount.
        let got = exhaustive(11, |b, i| b.shift_right_sticky(&i[..8], &i[8..]));
        for (r, v) in got.iter().enumerate() {
            let (x, s) = (r as u64 & 255, r as u64 >> 8);
            let lost = x & ((1u64 << s) - 1) != 0;
            let mut want = x >> s;
            if lost {
                want |= 1;
            }
            assert_eq!(*v, want, "x={x:#b} s={s}");
        }
    }

    #[test]
    fn limited_normalization() {
        // 7-bit value, 3-bit limit.
        let got = exhaustive(10, |b, i| {
            let (mut w, amt) = b.normalize_left(&i[..7], Some(&i[7..]), 3);
            w.extend(amt);
            w
        });
        for (r, v) in got.iter().enumerate() {
            let (x, lim) = (r as u64 & 127, r as u64 >> 7);
            let lz = if x == 0 { 7 } else { 6 - (63 - x.leading_zeros() as u64) };
            let sh = lz.min(lim);
            assert_eq!(v & 127, (x << sh) & 127, "x={x:#b} lim={lim}");
            assert_eq!(v >> 7, sh);
        }
    }

    #[test]
    fn saturation() {
        let got = exhaustive(6, |b, i| b.saturate(i, 3));
        for (r, v) in got.iter().enumerate() {
            assert_eq!(*v, (r as u64).min(7));
        }
    }
}
