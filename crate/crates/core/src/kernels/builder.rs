//! Gate-level circuit builder that lowers to column programs.
//!
//! Circuits are built as an SSA graph of NOT/NOR2/NOR3 nodes. Constants fold
//! on construction, structurally identical gates are shared, and complements
//! are remembered so `not(not(x))` costs nothing. Lowering drops dead nodes,
//! assigns physical columns by liveness and emits `INIT1` ahead of every gate
//! (stateful NOR needs its output cell preset).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::bitgrid::{ColumnOp, Gate};

/// A signal: a constant or a node in the builder's graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bit {
    Zero,
    One,
    Node(u32),
}

impl Bit {
    pub fn constant(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    fn id(self) -> Option<u32> {
        match self {
            Bit::Node(i) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Input(usize),
    Gate(Gate, Vec<u32>),
}

#[derive(Debug, Default)]
pub struct Builder {
    nodes: Vec<Node>,
    shared: HashMap<(Gate, Vec<u32>), u32>,
    complement: HashMap<u32, u32>,
}

/// Physical program produced by [`Builder::lower`].
#[derive(Debug, Clone)]
pub struct Lowered {
    pub ops: Vec<ColumnOp>,
    /// Total columns touched, inputs and outputs included.
    pub width: usize,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    /// A signal read from a fixed column that the program never overwrites.
    pub fn input(&mut self, col: usize) -> Bit {
        self.nodes.push(Node::Input(col));
        Bit::Node(self.nodes.len() as u32 - 1)
    }

    pub fn inputs(&mut self, cols: std::ops::Range<usize>) -> Vec<Bit> {
        cols.map(|c| self.input(c)).collect()
    }

    fn push(&mut self, gate: Gate, args: Vec<u32>) -> u32 {
        self.nodes.push(Node::Gate(gate, args));
        self.nodes.len() as u32 - 1
    }

    fn shared_gate(&mut self, gate: Gate, mut args: Vec<u32>) -> u32 {
        args.sort_unstable();
        if let Some(&id) = self.shared.get(&(gate, args.clone())) {
            return id;
        }
        let id = self.push(gate, args.clone());
        self.shared.insert((gate, args), id);
        id
    }

    fn complement_of(&self, a: Bit) -> Option<Bit> {
        match a {
            Bit::Zero => Some(Bit::One),
            Bit::One => Some(Bit::Zero),
            Bit::Node(i) => self.complement.get(&i).map(|&j| Bit::Node(j)),
        }
    }

    fn are_complements(&self, a: Bit, b: Bit) -> bool {
        self.complement_of(a) == Some(b)
    }

    pub fn not(&mut self, a: Bit) -> Bit {
        if let Some(c) = self.complement_of(a) {
            return c;
        }
        let x = a.id().unwrap();
        let n = self.shared_gate(Gate::Not, vec![x]);
        self.complement.insert(x, n);
        self.complement.insert(n, x);
        Bit::Node(n)
    }

    pub fn nor(&mut self, a: Bit, b: Bit) -> Bit {
        self.nor_n(&[a, b])
    }

    pub fn nor3(&mut self, a: Bit, b: Bit, c: Bit) -> Bit {
        self.nor_n(&[a, b, c])
    }

    fn nor_n(&mut self, xs: &[Bit]) -> Bit {
        let mut args: Vec<Bit> = Vec::with_capacity(3);
        for &x in xs {
            match x {
                Bit::One => return Bit::Zero,
                Bit::Zero => {}
                _ if args.contains(&x) => {}
                _ => {
                    if args.iter().any(|&y| self.are_complements(x, y)) {
                        return Bit::Zero;
                    }
                    args.push(x);
                }
            }
        }
        match args.len() {
            0 => Bit::One,
            1 => self.not(args[0]),
            n => {
                let ids = args.iter().map(|b| b.id().unwrap()).collect();
                let g = if n == 2 { Gate::Nor2 } else { Gate::Nor3 };
                let id = self.shared_gate(g, ids);
                // A NOR of a single-use pair is often re-inverted; the complement
                // cache picks that up in `not`.
                Bit::Node(id)
            }
        }
    }

    /// NOR2 emitted as-is, without folding or sharing. A constant-zero input
    /// degrades the gate to NOT of the other input.
    pub fn nor_unfolded(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Node(x), Bit::Node(y)) => Bit::Node(self.push(Gate::Nor2, vec![x, y])),
            (Bit::Zero, Bit::Node(x)) | (Bit::Node(x), Bit::Zero) => Bit::Node(self.push(Gate::Not, vec![x])),
            _ => self.nor(a, b),
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        let n = self.nor(a, b);
        self.not(n)
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        let na = self.not(a);
        let nb = self.not(b);
        self.nor(na, nb)
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Zero, x) | (x, Bit::Zero) => return x,
            (Bit::One, x) | (x, Bit::One) => return self.not(x),
            _ if a == b => return Bit::Zero,
            _ if self.are_complements(a, b) => return Bit::One,
            _ => {}
        }
        let n = self.nor(a, b);
        let na = self.not(a);
        let nb = self.not(b);
        let both = self.nor(na, nb);
        self.nor(n, both)
    }

    pub fn xnor(&mut self, a: Bit, b: Bit) -> Bit {
        let x = self.xor(a, b);
        self.not(x)
    }

    /// `s ? a : b`
    pub fn mux(&mut self, s: Bit, a: Bit, b: Bit) -> Bit {
        match s {
            Bit::One => return a,
            Bit::Zero => return b,
            _ => {}
        }
        if a == b {
            return a;
        }
        let ns = self.not(s);
        match (a, b) {
            (Bit::Zero, _) => {
                let nb = self.not(b);
                self.nor(s, nb)
            }
            (Bit::One, _) => self.or(s, b),
            (_, Bit::Zero) => {
                let na = self.not(a);
                self.nor(ns, na)
            }
            (_, Bit::One) => self.or(ns, a),
            _ => {
                let p = self.nor(a, ns);
                let q = self.nor(b, s);
                self.nor(p, q)
            }
        }
    }

    pub fn maj(&mut self, a: Bit, b: Bit, c: Bit) -> Bit {
        let ab = self.nor(a, b);
        let ac = self.nor(a, c);
        let bc = self.nor(b, c);
        self.nor3(ab, ac, bc)
    }

    /// Nine-NOR full adder; returns `(sum, carry)`.
    pub fn full_add(&mut self, a: Bit, b: Bit, c: Bit) -> (Bit, Bit) {
        let n1 = self.nor(a, b);
        let n2 = self.nor(a, n1);
        let n3 = self.nor(b, n1);
        let n4 = self.nor(n2, n3);
        let n5 = self.nor(n4, c);
        let n6 = self.nor(n4, n5);
        let n7 = self.nor(c, n5);
        let sum = self.nor(n6, n7);
        let carry = self.nor(n1, n5);
        (sum, carry)
    }

    /// The same nine gates with no folding: always exactly nine gates.
    pub fn full_add_unfolded(&mut self, a: Bit, b: Bit, c: Bit) -> (Bit, Bit) {
        let n1 = self.nor_unfolded(a, b);
        let n2 = self.nor_unfolded(a, n1);
        let n3 = self.nor_unfolded(b, n1);
        let n4 = self.nor_unfolded(n2, n3);
        let n5 = self.nor_unfolded(n4, c);
        let n6 = self.nor_unfolded(n4, n5);
        let n7 = self.nor_unfolded(c, n5);
        let sum = self.nor_unfolded(n6, n7);
        let carry = self.nor_unfolded(n1, n5);
        (sum, carry)
    }

    pub fn or_many(&mut self, xs: &[Bit]) -> Bit {
        let n = self.nor_many(xs);
        self.not(n)
    }

    pub fn nor_many(&mut self, xs: &[Bit]) -> Bit {
        let mut v: Vec<Bit> = xs.to_vec();
        // Reduce with OR3 (= NOT NOR3) until a final NOR of at most three remains.
        while v.len() > 3 {
            let mut next = Vec::with_capacity(v.len() / 3 + 1);
            for chunk in v.chunks(3) {
                if chunk.len() == 1 {
                    next.push(chunk[0]);
                } else {
                    let n = self.nor_n(chunk);
                    next.push(self.not(n));
                }
            }
            v = next;
        }
        self.nor_n(&v)
    }

    pub fn and_many(&mut self, xs: &[Bit]) -> Bit {
        let inv: Vec<Bit> = xs.iter().map(|&x| self.not(x)).collect();
        self.nor_many(&inv)
    }

    /// Number of nodes created so far (live or dead).
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Lowers the graph. `outputs[k]` lands in column `out_start + k`.
    /// Output columns must lie past every input column.
    pub fn lower(&self, outputs: &[Bit], out_start: usize) -> Lowered {
        let n = self.nodes.len();
        let mut live = vec![false; n];
        for b in outputs {
            if let Some(i) = b.id() {
                live[i as usize] = true;
            }
        }
        for i in (0..n).rev() {
            if live[i] {
                if let Node::Gate(_, args) = &self.nodes[i] {
                    for &a in args {
                        live[a as usize] = true;
                    }
                }
            }
        }

        // Pin outputs to their columns where possible; the rest become fix-ups.
        let mut col: Vec<Option<usize>> = vec![None; n];
        let mut pinned = vec![false; n];
        let mut max_input = 0usize;
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Input(c) = node {
                col[i] = Some(*c);
                pinned[i] = true;
                max_input = max_input.max(c + 1);
            }
        }
        assert!(out_start >= max_input, "output columns overlap inputs");
        let mut fixups: Vec<(usize, Bit)> = Vec::new();
        for (k, &b) in outputs.iter().enumerate() {
            let target = out_start + k;
            match b.id() {
                Some(i) if !pinned[i as usize] => {
                    pinned[i as usize] = true;
                    col[i as usize] = Some(target);
                }
                _ => fixups.push((target, b)),
            }
        }

        let mut last_use = vec![usize::MAX; n];
        for i in 0..n {
            if !live[i] {
                continue;
            }
            if let Node::Gate(_, args) = &self.nodes[i] {
                for &a in args {
                    last_use[a as usize] = i;
                }
            }
        }

        let mut next_fresh = out_start + outputs.len();
        let mut free: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut alloc = |free: &mut BinaryHeap<Reverse<usize>>| match free.pop() {
            Some(Reverse(c)) => c,
            None => {
                next_fresh += 1;
                next_fresh - 1
            }
        };
        let mut ops = Vec::new();
        for i in 0..n {
            let Node::Gate(g, args) = &self.nodes[i] else { continue };
            if !live[i] {
                continue;
            }
            let out = match col[i] {
                Some(c) => c,
                None => {
                    let c = alloc(&mut free);
                    col[i] = Some(c);
                    c
                }
            };
            let ins: Vec<usize> = args.iter().map(|&a| col[a as usize].unwrap()).collect();
            ops.push(ColumnOp::init1(out));
            ops.push(ColumnOp::new(*g, &ins, out));
            let mut released: Vec<usize> = Vec::new();
            for &a in args {
                let a = a as usize;
                if last_use[a] == i && !pinned[a] && !released.contains(&a) {
                    released.push(a);
                    free.push(Reverse(col[a].unwrap()));
                }
            }
        }

        for (target, b) in fixups {
            match b {
                Bit::Zero => ops.push(ColumnOp::init0(target)),
                Bit::One => ops.push(ColumnOp::init1(target)),
                Bit::Node(i) => {
                    let src = col[i as usize].unwrap();
                    let tmp = alloc(&mut free);
                    ops.push(ColumnOp::init1(tmp));
                    ops.push(ColumnOp::not(src, tmp));
                    ops.push(ColumnOp::init1(target));
                    ops.push(ColumnOp::not(tmp, target));
                    free.push(Reverse(tmp));
                }
            }
        }

        Lowered { ops, width: next_fresh }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitgrid::{FieldLayout, Grid};

    fn eval(b: &Builder, outputs: &[Bit], inputs: usize) -> Vec<u64> {
        let low = b.lower(outputs, inputs);
        let rows = 1usize << inputs;
        let mut g = Grid::new(rows, low.width, false).unwrap();
        for i in 0..inputs {
            let vals: Vec<u64> = (0..rows as u64).map(|r| r >> i & 1).collect();
            g.load_bits(&vals, &FieldLayout::new(i..i + 1)).unwrap();
        }
        g.run(&low.ops).unwrap();
        g.read_bits(&FieldLayout::new(inputs..inputs + outputs.len())).unwrap()
    }

    #[test]
    fn constants_fold() {
        let mut b = Builder::new();
        let x = b.input(0);
        assert_eq!(b.nor(x, Bit::One), Bit::Zero);
        let nx = b.not(x);
        assert_eq!(b.not(nx), x);
        assert_eq!(b.nor(x, nx), Bit::Zero);
        assert_eq!(b.nor(x, Bit::Zero), nx);
        assert_eq!(b.xor(x, x), Bit::Zero);
        assert_eq!(b.mux(Bit::One, x, nx), x);
    }

    #[test]
    fn sharing_reuses_nodes() {
        let mut b = Builder::new();
        let x = b.input(0);
        let y = b.input(1);
        let p = b.nor(x, y);
        let q = b.nor(y, x);
        assert_eq!(p, q);
    }

    #[test]
    fn full_adder_truth_table() {
        let mut b = Builder::new();
        let ins = b.inputs(0..3);
        let (s, c) = b.full_add(ins[0], ins[1], ins[2]);
        let out = eval(&b, &[s, c], 3);
        for (r, v) in out.iter().enumerate() {
            let total = (r & 1) + (r >> 1 & 1) + (r >> 2 & 1);
            assert_eq!(*v as usize, (total & 1) | (total >> 1) << 1, "row {r}");
        }
        assert_eq!(b.lower(&[s, c], 3).ops.len(), 18);
    }

    #[test]
    fn helpers_truth_tables() {
        let mut b = Builder::new();
        let i = b.inputs(0..3);
        let outs = [
            b.xor(i[0], i[1]),
            b.mux(i[2], i[0], i[1]),
            b.maj(i[0], i[1], i[2]),
            b.or_many(&i),
            b.and_many(&i),
            b.xnor(i[0], i[2]),
        ];
        let got = eval(&b, &outs, 3);
        for (r, v) in got.iter().enumerate() {
            let (a, bb, c) = (r & 1 == 1, r >> 1 & 1 == 1, r >> 2 & 1 == 1);
            let want = [
                a ^ bb,
                if c { a } else { bb },
                (a as u8 + bb as u8 + c as u8) >= 2,
                a || bb || c,
                a && bb && c,
                a == c,
            ];
            for (k, w) in want.iter().enumerate() {
                assert_eq!(v >> k & 1 == 1, *w, "row {r} output {k}");
            }
        }
    }

    #[test]
    fn duplicate_and_constant_outputs() {
        let mut b = Builder::new();
        let x = b.input(0);
        let y = b.input(1);
        let n = b.nor(x, y);
        let got = eval(&b, &[n, n, x, Bit::One, Bit::Zero], 2);
        for (r, v) in got.iter().enumerate() {
            let nor = (r == 0) as u64;
            assert_eq!(*v, nor | nor << 1 | (r as u64 & 1) << 2 | 1 << 3);
        }
    }

    #[test]
    fn wide_reductions() {
        let mut b = Builder::new();
        let xs = b.inputs(0..10);
        let o = b.or_many(&xs);
        let a = b.and_many(&xs);
        let got = eval(&b, &[o, a], 10);
        for (r, v) in got.iter().enumerate() {
            assert_eq!(*v, (r != 0) as u64 | ((r == 1023) as u64) << 1);
        }
    }
}
