use dpim_core::bitgrid::{Gate, Grid};
use dpim_core::kernels::{
    build, build_fixed_add, build_fixed_mult, build_float_add, build_float_mult, compute_complexity, directed_pairs,
    edge_values, measure, oracle, verify_kernel, verify_pairs, ArithOp, ColumnProgram, LatencyTable, Sampling,
};
use dpim_core::{Number, NumberFormat};
use num_rational::Ratio;

fn u32f() -> NumberFormat {
    NumberFormat::unsigned(32).unwrap()
}

/// Runs `program` on explicit rows and returns the raw result bits.
fn run_rows(p: &ColumnProgram, pairs: &[(u64, u64)]) -> Vec<u64> {
    let mut g = Grid::new(pairs.len(), p.width(), false).unwrap();
    let (us, vs): (Vec<u64>, Vec<u64>) = pairs.iter().copied().unzip();
    g.load_bits(&us, &p.u_layout()).unwrap();
    g.load_bits(&vs, &p.v_layout()).unwrap();
    p.run(&mut g).unwrap();
    g.read_bits(&p.z_layout()).unwrap()
}

fn run_values(p: &ColumnProgram, u: f64, v: f64) -> Number {
    let mut g = Grid::new(1, p.width(), false).unwrap();
    g.load_operands(&[u.into()], p.format, &p.u_layout()).unwrap();
    g.load_operands(&[v.into()], p.format, &p.v_layout()).unwrap();
    p.run(&mut g).unwrap();
    g.read_results(p.format, &p.z_layout()).unwrap()[0]
}

#[test]
fn fixed_add_examples() {
    let p = build_fixed_add(u32f()).unwrap();
    assert_eq!(run_rows(&p, &[(1, 2), (0xFFFF_FFFF, 1)]), vec![3, 0]);
}

#[test]
fn fixed_mult_examples() {
    let p = build_fixed_mult(u32f()).unwrap();
    assert_eq!(run_rows(&p, &[(3, 5), (1 << 16, 1 << 16)]), vec![15, 0]);
    // The high half of the product lands in the auxiliary columns.
    let mut g = Grid::new(1, p.width(), false).unwrap();
    g.load_bits(&[0xDEAD_BEEF], &p.u_layout()).unwrap();
    g.load_bits(&[0xCAFE_F00D], &p.v_layout()).unwrap();
    p.run(&mut g).unwrap();
    let full = 0xDEAD_BEEFu64 * 0xCAFE_F00D;
    let aux = dpim_core::bitgrid::FieldLayout::new(p.aux.clone());
    assert_eq!(g.read_bits(&aux).unwrap()[0], full >> 32);
    assert_eq!(g.read_bits(&p.z_layout()).unwrap()[0], full & 0xFFFF_FFFF);
}

#[test]
fn exhaustive_8bit_fixed() {
    for signed in [false, true] {
        let f = NumberFormat::fixed(8, signed).unwrap();
        for op in [ArithOp::Add, ArithOp::Mult] {
            let v = verify_kernel(&build(op, f).unwrap(), Sampling::Exhaustive).unwrap();
            assert_eq!(v.cases, 65536);
            assert!(v.passed(), "{v}");
        }
    }
}

#[test]
fn fixed_random_16_and_32() {
    for bits in [16, 32] {
        for op in [ArithOp::Add, ArithOp::Mult] {
            let p = build(op, NumberFormat::unsigned(bits).unwrap()).unwrap();
            let v = verify_kernel(&p, Sampling::Random { samples: 50_000, seed: 3 }).unwrap();
            assert!(v.passed(), "{v}");
        }
    }
}

#[test]
fn float_add_examples() {
    let p = build_float_add(NumberFormat::SINGLE).unwrap();
    assert_eq!(run_values(&p, 1.0, 1.0), Number::Float(2.0));
    // 1 + 2^-24 is a tie and rounds to the even neighbour, 1.
    assert_eq!(run_values(&p, 1.0, 2f64.powi(-24)), Number::Float(1.0));
    assert_eq!(run_values(&p, 1.5, -1.5), Number::Float(0.0));
    assert!(run_values(&p, f64::INFINITY, f64::NEG_INFINITY).as_f64().is_nan());
}

#[test]
fn float_mult_examples() {
    let p = build_float_mult(NumberFormat::SINGLE).unwrap();
    assert_eq!(run_values(&p, 1.5, 2.0), Number::Float(3.0));
    assert!(run_values(&p, 0.0, f64::INFINITY).as_f64().is_nan());
    // x * 1.0 == x for every finite edge value, bit for bit.
    let finite: Vec<(u64, u64)> = edge_values(NumberFormat::SINGLE)
        .into_iter()
        .filter(|&x| f32::from_bits(x as u32).is_finite())
        .map(|x| (x, 0x3F80_0000))
        .collect();
    let got = run_rows(&p, &finite);
    for ((x, _), z) in finite.iter().zip(got) {
        assert_eq!(*x, z);
    }
}

#[test]
fn nan_results_are_canonical_quiet_nan() {
    let s = NumberFormat::SINGLE;
    for p in [build_float_add(s).unwrap(), build_float_mult(s).unwrap()] {
        let got = run_rows(&p, &[(0x7F80_0001, 0x3F80_0000), (0xFFC0_1234, 0x0000_0000)]);
        assert!(got.iter().all(|&z| z == 0x7FC0_0000), "{got:x?}");
    }
}

#[test]
fn directed_float_cases() {
    for f in [NumberFormat::HALF, NumberFormat::SINGLE] {
        for op in [ArithOp::Add, ArithOp::Mult] {
            let p = build(op, f).unwrap();
            let v = verify_pairs(&p, &directed_pairs(op, f)).unwrap();
            assert!(v.passed(), "{v}");
        }
    }
}

#[test]
fn half_sweep_every_first_operand() {
    // Every 16-bit u against a spread of v values: edges and a stride.
    let f = NumberFormat::HALF;
    let mut vs = edge_values(f);
    vs.extend((0..65536u64).step_by(4099));
    for op in [ArithOp::Add, ArithOp::Mult] {
        let p = build(op, f).unwrap();
        let pairs: Vec<(u64, u64)> = vs.iter().flat_map(|&v| (0..65536u64).map(move |u| (u, v))).collect();
        let v = verify_pairs(&p, &pairs).unwrap();
        assert!(v.passed(), "{v}");
    }
}

#[test]
fn single_random_samples() {
    for op in [ArithOp::Add, ArithOp::Mult] {
        let p = build(op, NumberFormat::SINGLE).unwrap();
        let v = verify_kernel(&p, Sampling::Random { samples: 100_000, seed: 11 }).unwrap();
        assert!(v.passed(), "{v}");
    }
}

#[test]
fn corrupted_program_is_caught() {
    let mut p = build_fixed_add(NumberFormat::unsigned(8).unwrap()).unwrap();
    let i = p.ops.iter().position(|o| o.gate == Gate::Nor2).unwrap() + 10;
    let op = &mut p.ops[i];
    op.gate = match op.gate {
        Gate::Nor2 => Gate::Or2,
        Gate::Not => Gate::Init0,
        _ => Gate::Init0,
    };
    op.inputs.truncate(op.gate.arity());
    let v = verify_kernel(&p, Sampling::Exhaustive).unwrap();
    assert!(!v.passed());
    let m = v.first_mismatch.unwrap();
    assert_ne!(m.expected, m.actual);
    assert_eq!(m.expected, oracle(ArithOp::Add, p.format, m.u, m.v));
}

#[test]
fn programs_are_data_independent() {
    // Building twice yields the same op sequence, and any input produces the
    // same cycle count and gate histogram.
    let f = NumberFormat::HALF;
    let a = build_float_add(f).unwrap();
    let b = build_float_add(f).unwrap();
    assert_eq!(a.ops, b.ops);
    let mut g1 = Grid::new(3, a.width(), false).unwrap();
    let mut g2 = Grid::new(3, a.width(), true).unwrap();
    let s1 = a.run(&mut g1).unwrap();
    let s2 = a.run(&mut g2).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(s1.cycles, a.latency());
}

#[test]
fn rows_batch_equals_single_rows() {
    let p = build_float_mult(NumberFormat::HALF).unwrap();
    let pairs: Vec<(u64, u64)> = (0..200u64).map(|i| (i * 331 % 65536, (i * 7919 + 15360) % 65536)).collect();
    let batch = run_rows(&p, &pairs);
    for (pair, z) in pairs.iter().zip(batch) {
        assert_eq!(run_rows(&p, &[*pair])[0], z);
    }
}

#[test]
fn layout_and_gate_profile() {
    for f in [NumberFormat::unsigned(8).unwrap(), u32f(), NumberFormat::HALF, NumberFormat::SINGLE] {
        for op in [ArithOp::Add, ArithOp::Mult] {
            let p = build(op, f).unwrap();
            let n = f.total_bits() as usize;
            assert_eq!((p.u.clone(), p.v.clone(), p.z.clone()), (0..n, n..2 * n, 2 * n..3 * n));
            assert!(p.is_memristive(), "{}", p.key());
            for o in &p.ops {
                assert!(!p.u.contains(&o.output) && !p.v.contains(&o.output), "{} writes an input", p.key());
                o.validate(p.width()).unwrap();
            }
            let h = p.gate_histogram();
            assert_eq!(h.values().sum::<u64>(), p.latency());
        }
    }
}

#[test]
fn unsupported_formats_rejected() {
    let f7 = NumberFormat::unsigned(7).unwrap();
    assert!(build_fixed_add(f7).is_err());
    assert!(build_fixed_mult(NumberFormat::SINGLE).is_err());
    assert!(build_float_add(u32f()).is_err());
    assert!(NumberFormat::float(11, 52).is_err());
}

#[test]
fn addition_latency_is_linear_in_width() {
    let l = |bits| build_fixed_add(NumberFormat::unsigned(bits).unwrap()).unwrap().latency();
    assert_eq!(l(16), 2 * l(8));
    assert_eq!(l(32), 2 * l(16));
    assert_eq!(l(32), 18 * 32);
    let cc = |bits| measure(&build_fixed_add(NumberFormat::unsigned(bits).unwrap()).unwrap()).cc;
    assert_eq!(cc(16), cc(32));
}

#[test]
fn compute_complexity_is_exact() {
    let r = measure(&build_float_add(NumberFormat::SINGLE).unwrap());
    assert_eq!(r.io_bits, 96);
    assert_eq!(r.cc * Ratio::from_integer(r.io_bits), Ratio::from_integer(r.latency_cycles));
    assert_eq!(compute_complexity(96, NumberFormat::SINGLE), Ratio::from_integer(1));
    let t = LatencyTable::calibrated();
    let cc = |k: &str, f: NumberFormat| {
        let c = compute_complexity(t.get_key(k).unwrap(), f);
        *c.numer() as f64 / *c.denom() as f64
    };
    assert!((cc("fixed-add32", u32f()) - 6.02).abs() < 0.01);
    assert!((cc("fixed-mult16", NumberFormat::unsigned(16).unwrap()) - 103.0).abs() < 0.01);
}

#[test]
fn measured_table_matches_built_programs() {
    let t = LatencyTable::measured().unwrap();
    assert_eq!(t.get(ArithOp::Add, u32f()).unwrap(), 576);
    assert_eq!(
        t.get(ArithOp::Mult, NumberFormat::SINGLE).unwrap(),
        build_float_mult(NumberFormat::SINGLE).unwrap().latency()
    );
}

#[test]
fn signed_fixed_wraps() {
    let f = NumberFormat::signed(16).unwrap();
    let p = build_fixed_add(f).unwrap();
    let mut g = Grid::new(2, p.width(), false).unwrap();
    g.load_operands(&[32767i64.into(), (-5i64).into()], f, &p.u_layout()).unwrap();
    g.load_operands(&[1i64.into(), 3i64.into()], f, &p.v_layout()).unwrap();
    p.run(&mut g).unwrap();
    assert_eq!(g.read_results(f, &p.z_layout()).unwrap(), vec![Number::Int(-32768), Number::Int(-2)]);
}
