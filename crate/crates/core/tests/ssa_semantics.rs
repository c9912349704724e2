mod common;

use std::collections::HashMap;

use common::{random_program, KeyHash};
use leakbound_core::bits::BitVec;
use leakbound_core::lang::load_text;
use leakbound_core::lang::types::{Arch, Type};
use leakbound_core::oracle::{run_concrete, ConcreteValue, ExecError};
use leakbound_core::ssa::{build_ssa, evaluate, unwind_program, UnwindConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PARAMS: [(&str, bool, u32); 4] = [("a", false, 8), ("b", true, 8), ("c", false, 16), ("d", true, 32)];

fn check_program(seed: u64, arch: Arch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_program(&mut rng);
    let a = load_text(&src, arch).unwrap_or_else(|e| panic!("seed {}: {}\n{}", seed, e, src));
    let unwound = unwind_program(&a.program, UnwindConfig { bound: 3, check: true });
    let ssa = build_ssa(&unwound).unwrap_or_else(|e| panic!("seed {}: {}\n{}", seed, e, src));
    for run in 0..4u64 {
        let vals: Vec<u64> = PARAMS
            .iter()
            .map(|_| match rng.gen_range(0..4) {
                0 => 0,
                1 => u64::MAX,
                _ => rng.gen(),
            })
            .collect();
        let high: Vec<ConcreteValue> = PARAMS
            .iter()
            .zip(&vals)
            .map(|((_, s, w), v)| ConcreteValue::scalar(Type::int(*s, *w), *v))
            .collect();
        let nd = seed.wrapping_mul(31).wrapping_add(run);
        let direct = run_concrete(&a.program, &a.harness, &high, &[], &mut KeyHash(nd), 100_000);
        let unrolled = run_concrete(&unwound, &a.harness, &high, &[], &mut KeyHash(nd), 100_000);
        match (&direct, &unrolled) {
            (Ok(x), Ok(y)) => assert_eq!(x, y, "seed {}\n{}", seed, src),
            (Err(e), _) => panic!("seed {}: {}\n{}", seed, e, src),
            (_, Err(e)) => panic!("seed {}: unwound run failed: {}\n{}", seed, e, src),
        }
        let obs = direct.unwrap();
        let inputs: HashMap<String, BitVec> = PARAMS
            .iter()
            .zip(&high)
            .map(|((n, ..), v)| (n.to_string(), v.bits.clone()))
            .collect();
        let val = evaluate(&ssa, &inputs, &mut KeyHash(nd));
        assert!(val.failed.is_empty(), "seed {}: unwinding assertion\n{}", seed, src);
        assert!(val.assumptions_hold);
        let ret = val.eval(ssa.output("__return").unwrap());
        assert_eq!(ret, obs[0].bits, "seed {} run {}: return\n{}", seed, run, src);
        let out = val.eval(ssa.output("out").unwrap());
        assert_eq!(out, obs[1].bits, "seed {} run {}: out\n{}", seed, run, src);
    }
}

#[test]
fn ssa_agrees_with_interpreter_on_random_programs() {
    for seed in 0..1000 {
        let arch = if seed % 2 == 0 { Arch::X32 } else { Arch::X64 };
        check_program(seed, arch);
    }
}

#[test]
fn loop_beyond_bound_fails_unwinding_assertion() {
    let src = "#pragma leak high n\n#pragma leak observe __return\n\
        int f(unsigned char n) { int s = 0; while (n > 0) { s = s + n; n = n - 1; } return s; }";
    let a = load_text(src, Arch::X32).unwrap();
    let u = unwind_program(&a.program, UnwindConfig { bound: 4, check: true });
    let ssa = build_ssa(&u).unwrap();
    for n in 0..8u64 {
        let inputs = HashMap::from([("n".to_string(), BitVec::from_u64(8, n))]);
        let val = evaluate(&ssa, &inputs, &mut KeyHash(0));
        assert_eq!(val.failed.is_empty(), n <= 4, "n = {}", n);
        let h = [ConcreteValue::scalar(Type::int(false, 8), n)];
        let r = run_concrete(&u, &a.harness, &h, &[], &mut KeyHash(0), 10_000);
        if n <= 4 {
            assert_eq!(r.unwrap()[0].bits, val.eval(ssa.output("__return").unwrap()));
        } else {
            assert!(matches!(r, Err(ExecError::UnwindingAssertion(_))));
        }
    }
}
