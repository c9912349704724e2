mod common;

use common::checks;
use leakbound_core::lang::load_text;
use leakbound_core::lang::types::Arch;
use leakbound_core::sat::{encode, solve, Blaster, Cnf, Goal, Lit, SatResult, SolverConfig};
use leakbound_core::ssa::build_ssa;
use proptest::prelude::*;

#[test]
fn encoding_agrees_with_interpreter_on_random_programs() {
    let summary = checks::encoder_differential(1000, 10).unwrap_or_else(|e| panic!("{}", e));
    assert_eq!(summary, "10000 pairs agree");
}

#[test]
fn negated_assignment_gives_two_binary_clauses() {
    let src = "#pragma leak high y\n#pragma leak observe __return\n_Bool f(_Bool y) { _Bool x; x = !y; return x; }";
    let a = load_text(src, Arch::X32).unwrap();
    let ssa = build_ssa(&a.program).unwrap();
    let enc = encode(&ssa, Goal::Feasible);
    let y = enc.cnf.names.iter().find(|(n, _)| n == "f::y[0]").unwrap().1;
    let x = enc.cnf.names.iter().find(|(n, _)| n == "f::0::x#2[0]").unwrap().1;
    let mut want = vec![vec![!x, !y], vec![x, y]];
    let mut got: Vec<Vec<Lit>> = enc
        .cnf
        .clauses
        .iter()
        .filter(|c| c.iter().any(|l| l.var() == x.var()))
        .cloned()
        .collect();
    for c in want.iter_mut().chain(got.iter_mut()) {
        c.sort();
    }
    want.sort();
    got.sort();
    assert_eq!(got, want);
}

#[test]
fn two_bit_adder_miter_is_unsat() {
    let mut b = Blaster::new();
    let x: Vec<Lit> = (0..2).map(|_| b.fresh()).collect();
    let y: Vec<Lit> = (0..2).map(|_| b.fresh()).collect();
    let sum = b.word_op(leakbound_core::bits::WordOp::Add, &x, &y);
    // Hand-written reference adder over separate variables tied to x and y.
    let mut cnf = b.cnf.clone();
    let v = |cnf: &mut Cnf| cnf.new_var();
    let s0 = v(&mut cnf);
    let s1 = v(&mut cnf);
    let mut clauses = vec![];
    // s0 <-> x0 xor y0
    clauses.extend([
        vec![!s0, x[0], y[0]],
        vec![!s0, !x[0], !y[0]],
        vec![s0, !x[0], y[0]],
        vec![s0, x[0], !y[0]],
    ]);
    // s1 <-> x1 xor y1 xor (x0 and y0)
    for bits in 0..16u32 {
        let l = |i: u32, lit: Lit| if bits >> i & 1 == 1 { !lit } else { lit };
        let (a0, b0, a1, b1) = (bits & 1, bits >> 1 & 1, bits >> 2 & 1, bits >> 3 & 1);
        let want = (a1 ^ b1 ^ (a0 & b0)) == 1;
        clauses.push(vec![
            l(0, x[0]),
            l(1, y[0]),
            l(2, x[1]),
            l(3, y[1]),
            if want { s1 } else { !s1 },
        ]);
    }
    for c in clauses {
        cnf.add_clause(c);
    }
    let mut miter = cnf;
    let m0 = miter.new_var();
    let m1 = miter.new_var();
    for (m, p, q) in [(m0, sum[0], s0), (m1, sum[1], s1)] {
        miter.add_clause(vec![!m, p, q]);
        miter.add_clause(vec![!m, !p, !q]);
    }
    miter.add_clause(vec![m0, m1]);
    assert_eq!(solve(&miter, &SolverConfig::default()).0, SatResult::Unsat);
}

fn brute_force(n: u32, clauses: &[Vec<Lit>]) -> bool {
    (0..1u32 << n).any(|m| {
        clauses
            .iter()
            .all(|c| c.iter().any(|l| (m >> l.var() & 1 == 1) != l.is_negated()))
    })
}

fn clause_strategy(n: u32) -> impl Strategy<Value = Vec<Lit>> {
    prop::collection::vec((0..n, any::<bool>()), 0..4)
        .prop_map(|ls| ls.into_iter().map(|(v, s)| Lit::new(v, s)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn solver_agrees_with_truth_tables(n in 1u32..9, clauses in prop::collection::vec(clause_strategy(8), 0..40), restarts: bool) {
        let clauses: Vec<Vec<Lit>> = clauses
            .into_iter()
            .map(|c| c.into_iter().map(|l| Lit::new(l.var() % n, l.is_negated())).collect())
            .collect();
        let cnf = Cnf { num_vars: n, clauses: clauses.clone(), ..Cnf::default() };
        let cfg = SolverConfig { conflict_budget: None, restarts };
        let (r, _) = solve(&cnf, &cfg);
        let expected = brute_force(n, &clauses);
        match r {
            SatResult::Sat(m) => {
                prop_assert!(expected);
                prop_assert!(cnf.satisfied_by(&m));
            }
            SatResult::Unsat => prop_assert!(!expected),
            SatResult::Unknown => prop_assert!(false),
        }
    }

    #[test]
    fn dimacs_round_trips(n in 1u32..9, clauses in prop::collection::vec(clause_strategy(8), 0..20)) {
        let clauses: Vec<Vec<Lit>> = clauses
            .into_iter()
            .map(|c| c.into_iter().map(|l| Lit::new(l.var() % n, l.is_negated())).collect())
            .collect();
        let cnf = Cnf { num_vars: n, clauses, ..Cnf::default() };
        prop_assert_eq!(Cnf::parse_dimacs(&cnf.to_dimacs()).unwrap(), cnf);
    }
}

#[test]
fn solving_is_deterministic() {
    let src = std::fs::read_to_string(common::corpus_path("login.mc")).unwrap();
    let a = load_text(&src, Arch::X64).unwrap();
    let ssa = build_ssa(&a.program).unwrap();
    let enc = encode(&ssa, Goal::Feasible);
    let first = solve(&enc.cnf, &SolverConfig::default());
    for _ in 0..3 {
        assert_eq!(solve(&enc.cnf, &SolverConfig::default()), first);
    }
}
