use std::collections::HashSet;
use std::path::PathBuf;

use leakbound_core::lang::types::{Arch, Type};
use leakbound_core::lang::{load, read_source, Analysed};
use leakbound_core::nondet::ZeroSource;
use leakbound_core::oracle::interp::DEFAULT_MAX_STEPS;
use leakbound_core::oracle::*;

fn corpus(name: &str, arch: Arch) -> Analysed {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    load(read_source(&path).unwrap(), arch).unwrap()
}

fn u8s(vals: impl IntoIterator<Item = u64>) -> Vec<Vec<ConcreteValue>> {
    vals.into_iter()
        .map(|v| vec![ConcreteValue::scalar(Type::int(false, 8), v)])
        .collect()
}

fn run(a: &Analysed, high: &[ConcreteValue], low: &[ConcreteValue]) -> Observation {
    run_concrete(&a.program, &a.harness, high, low, &mut ZeroSource, DEFAULT_MAX_STEPS).unwrap()
}

#[test]
fn modulo_runs() {
    let a = corpus("modulo.mc", Arch::X32);
    let h = |v| ConcreteValue::scalar(Type::int(false, 8), v);
    let l = |v| ConcreteValue::scalar(Type::Bool, v);
    assert_eq!(run(&a, &[h(5)], &[l(1)])[0].to_i128(), 2);
    assert_eq!(run(&a, &[h(0)], &[l(0)])[0].to_i128(), 0);
    assert_eq!(run(&a, &[h(255)], &[l(1)])[0].to_i128(), 4);
}

#[test]
fn modulo_classes_match_residues() {
    let a = corpus("modulo.mc", Arch::X32);
    let low = vec![ConcreteValue::scalar(Type::Bool, 1)];
    let rel = enumerate_relation(&a.program, &a.harness, &low, u8s(0..16), &OracleConfig::default()).unwrap();
    assert_eq!(rel.class_count(), 4);
    let idx = rel.domain.iter().position(|p| p.high[0].to_u64() == 1).unwrap();
    let class: HashSet<u64> = rel
        .partition
        .class_of(idx)
        .unwrap()
        .iter()
        .map(|&i| rel.domain[i].high[0].to_u64())
        .collect();
    let expect: HashSet<u64> = (0..16).filter(|h| h % 4 == 1).collect();
    assert_eq!(class, expect);
    assert_eq!(class, HashSet::from([1, 5, 9, 13]));
}

#[test]
fn underflow_wraps_for_large_offset() {
    let a = corpus("underflow.mc", Arch::X32);
    let h = ConcreteValue::scalar(Type::int(true, 32), 0x1234);
    let ppos = ConcreteValue::scalar(Type::int(true, 64), 1706688912);
    assert_eq!(
        run(&a, std::slice::from_ref(&h), std::slice::from_ref(&ppos))[0].to_i128(),
        0x1234
    );
    let small = ConcreteValue::scalar(Type::int(true, 64), 10);
    assert_eq!(run(&a, std::slice::from_ref(&h), &[small])[0].to_i128(), 0);
    let p = corpus("underflow_patched.mc", Arch::X32);
    assert_eq!(run(&p, &[h], &[ppos])[0].to_i128(), 0);
}

#[test]
fn password_capacity_is_two() {
    let a = corpus("password.mc", Arch::X32);
    let (_, n) = oracle_capacity(
        &a.program,
        &a.harness,
        u8s(0..4),
        &u8s(0..256),
        &OracleConfig::default(),
    )
    .unwrap();
    assert_eq!(n, 2);
}

#[test]
fn constant_and_identity_programs() {
    let konst = leakbound_core::lang::load_text(
        "#pragma leak high h\n#pragma leak observe __return\nint f(unsigned char h) { return 7; }",
        Arch::X32,
    )
    .unwrap();
    let rel = enumerate_relation(
        &konst.program,
        &konst.harness,
        &[],
        u8s(0..256),
        &OracleConfig::default(),
    )
    .unwrap();
    assert_eq!(rel.class_count(), 1);
    let id = leakbound_core::lang::load_text(
        "#pragma leak high h\n#pragma leak observe __return\nint f(unsigned char h) { return h & 15; }",
        Arch::X32,
    )
    .unwrap();
    let rel = enumerate_relation(&id.program, &id.harness, &[], u8s(0..16), &OracleConfig::default()).unwrap();
    assert_eq!(rel.class_count(), 16);
    let low_only = leakbound_core::lang::load_text(
        "#pragma leak high h\n#pragma leak low l\n#pragma leak observe __return\nint f(unsigned char h, unsigned char l) { return l; }",
        Arch::X32,
    )
    .unwrap();
    let (_, n) = oracle_capacity(
        &low_only.program,
        &low_only.harness,
        u8s(0..8),
        &u8s(0..256),
        &OracleConfig::default(),
    )
    .unwrap();
    assert_eq!(n, 1);
}

#[test]
fn login_has_three_outcomes() {
    let a = corpus("login.mc", Arch::X32);
    let lows: Vec<Vec<ConcreteValue>> = [(1, 0x10), (0, 0x10)]
        .iter()
        .map(|&(u, p)| {
            vec![
                ConcreteValue::scalar(Type::Bool, u),
                ConcreteValue::scalar(Type::int(false, 8), p),
            ]
        })
        .collect();
    let (best, n) = oracle_capacity(&a.program, &a.harness, lows, &u8s(0..256), &OracleConfig::default()).unwrap();
    assert_eq!(n, 3);
    assert_eq!(best[0].to_u64(), 1);
}

#[test]
fn padding_bytes_are_secret_choices() {
    let a = corpus("sigaltstack_small.mc", Arch::X64);
    let low = vec![ConcreteValue::scalar(Type::int(false, 8), 9)];
    let rel = enumerate_relation(&a.program, &a.harness, &low, [vec![]], &OracleConfig::default()).unwrap();
    assert_eq!(rel.domain.len(), 256);
    assert_eq!(rel.class_count(), 256);
    let p = corpus("tcf_patched.mc", Arch::X32);
    let low = vec![ConcreteValue::scalar(Type::Bool, 1)];
    let rel = enumerate_relation(&p.program, &p.harness, &low, [vec![]], &OracleConfig::default()).unwrap();
    assert_eq!(rel.class_count(), 1);
}

#[test]
fn budget_is_enforced() {
    let a = corpus("tcf.mc", Arch::X32);
    let low = vec![ConcreteValue::scalar(Type::Bool, 0)];
    let cfg = OracleConfig {
        budget: 1000,
        ..OracleConfig::default()
    };
    assert_eq!(
        enumerate_relation(&a.program, &a.harness, &low, [vec![]], &cfg).unwrap_err(),
        OracleError::Budget(1000)
    );
}

#[test]
fn whole_corpus_loads() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        for arch in [Arch::X32, Arch::X64] {
            let src = read_source(&path).unwrap();
            if let Err(e) = load(src, arch) {
                panic!("{}: {}", path.display(), e);
            }
        }
    }
}
