//! Whole-suite checks shared by the integration tests and the acceptance
//! report. Each returns a short summary on success.

use leakbound_core::bits::BitVec;
use leakbound_core::lang::types::{Arch, Type};
use leakbound_core::lang::{load, load_text, read_source, Analysed};
use leakbound_core::metrics::{loi_leq, shannon_entropy, Distribution, Partition};
use leakbound_core::nondet::NondetSource;
use leakbound_core::oracle::{full_domain, oracle_capacity, run_concrete, ConcreteValue, OracleConfig, OracleError};
use leakbound_core::policy::{check_policy, CheckConfig, Verdict};
use leakbound_core::sat::{encode, solve, Cnf, Goal, Lit, SatResult, SolverConfig};
use leakbound_core::ssa::{build_ssa, eval_expr, unwind_program, SsaStmt, UnwindConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{corpus_path, random_program, KeyHash};

pub const RANDOM_PARAMS: [(&str, bool, u32); 4] = [("a", false, 8), ("b", true, 8), ("c", false, 16), ("d", true, 32)];

fn fix(cnf: &mut Cnf, lits: &[Lit], v: &BitVec) {
    for (i, &l) in lits.iter().enumerate() {
        cnf.add_clause(vec![if v.bit(i as u32) { l } else { !l }]);
    }
}

/// Fix inputs and nondet bits of random programs by unit clauses, solve and
/// compare the outputs with the interpreter.
pub fn encoder_differential(programs: u64, runs: u64) -> Result<String, String> {
    let mut pairs = 0;
    for seed in 0..programs {
        let arch = if seed % 2 == 0 { Arch::X64 } else { Arch::X32 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let src = random_program(&mut rng);
        let a = load_text(&src, arch).map_err(|e| format!("seed {}: {}", seed, e))?;
        let unwound = unwind_program(&a.program, UnwindConfig { bound: 3, check: true });
        let ssa = build_ssa(&unwound).map_err(|e| format!("seed {}: {}", seed, e))?;
        let enc = encode(&ssa, Goal::Feasible);
        for run in 0..runs {
            let high: Vec<ConcreteValue> = RANDOM_PARAMS
                .iter()
                .map(|(_, s, w)| ConcreteValue::scalar(Type::int(*s, *w), rng.gen()))
                .collect();
            let nd = seed * 100 + run;
            let obs = run_concrete(&a.program, &a.harness, &high, &[], &mut KeyHash(nd), 100_000)
                .map_err(|e| format!("seed {} run {}: {}", seed, run, e))?;
            let mut cnf = enc.cnf.clone();
            for s in &ssa.stmts {
                match s {
                    SsaStmt::Input { var, name } => {
                        let i = RANDOM_PARAMS.iter().position(|p| p.0 == name).unwrap();
                        fix(&mut cnf, &enc.bits[*var as usize], &high[i].bits);
                    }
                    SsaStmt::Nondet { var, key } => {
                        let v = BitVec::from_u64(key.width, KeyHash(nd).choose(key));
                        fix(&mut cnf, &enc.bits[*var as usize], &v);
                    }
                    _ => {}
                }
            }
            let model = match solve(&cnf, &SolverConfig::default()).0 {
                SatResult::Sat(m) => m,
                r => return Err(format!("seed {} run {}: solver said {:?}", seed, run, r)),
            };
            let values: Vec<Option<BitVec>> = (0..ssa.vars.len())
                .map(|v| Some(enc.var_value(&model, v as u32)))
                .collect();
            for (i, name) in ["__return", "out"].into_iter().enumerate() {
                let got = eval_expr(ssa.output(name).unwrap(), &values);
                if got != obs[i].bits {
                    return Err(format!(
                        "seed {} run {}: {} is {} symbolically, {} concretely",
                        seed,
                        run,
                        name,
                        got.to_bin_string(),
                        obs[i].bits.to_bin_string()
                    ));
                }
            }
            pairs += 1;
        }
    }
    Ok(format!("{} pairs agree", pairs))
}

/// Class count maximised over the low inputs, or `None` past the budget.
pub fn oracle_class_count(a: &Analysed) -> Result<Option<u32>, String> {
    let (Some(high), Some(low)) = (full_domain(&a.harness.high), full_domain(&a.harness.low)) else {
        return Ok(None);
    };
    if (high.len() as u64) * (low.len() as u64) > 1 << 20 {
        return Ok(None);
    }
    match oracle_capacity(&a.program, &a.harness, low, &high, &OracleConfig::default()) {
        Ok((_, c)) => Ok(Some(c as u32)),
        Err(OracleError::Budget(_)) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

/// The verdict a correct checker gives at threshold `n` for `c` classes.
pub fn expected_verdict(c: u32, n: u32) -> Verdict {
    if n < c {
        Verdict::Violated(Default::default())
    } else if n == c || n == 1 {
        Verdict::VerifiedComplete
    } else {
        Verdict::Vacuous(c)
    }
}

pub fn agrees(a: &Analysed, c: u32, n: u32) -> Result<(), String> {
    let got = check_policy(a, n, &CheckConfig::default())
        .map_err(|e| e.to_string())?
        .verdict;
    let want = expected_verdict(c, n);
    let same = match (&got, &want) {
        (Verdict::Violated(_), Verdict::Violated(_)) => true,
        _ => got == want,
    };
    if same {
        Ok(())
    } else {
        Err(format!("{} classes, N={}: got {:?}, want {}", c, n, got, want.name()))
    }
}

/// Every enumerable corpus program, both architectures, thresholds `1..=max_n`.
pub fn corpus_sweep(max_n: u32) -> Result<String, String> {
    let mut programs = 0;
    let mut checks = 0;
    let mut files: Vec<_> = std::fs::read_dir(corpus_path(""))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for path in files {
        for arch in [Arch::X32, Arch::X64] {
            let what = format!("{} {:?}", path.file_name().unwrap().to_string_lossy(), arch);
            let src = read_source(&path).map_err(|e| e.to_string())?;
            let a = load(src, arch).map_err(|e| format!("{}: {}", what, e))?;
            let Some(c) = oracle_class_count(&a).map_err(|e| format!("{}: {}", what, e))? else {
                continue;
            };
            for n in 1..=max_n {
                agrees(&a, c, n).map_err(|e| format!("{}: {}", what, e))?;
                checks += 1;
            }
            programs += 1;
        }
    }
    if programs < 12 {
        return Err(format!("only {} corpus programs were enumerable", programs));
    }
    Ok(format!("{} programs, {} verdicts, 0 disagreements", programs, checks))
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Partition>) {
        if prefix.len() == n {
            out.push(Partition::from_labels(prefix.iter().copied()));
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            prefix.push(l);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

/// Refinement by its definition: points together in `finer` are together
/// in `coarser`.
pub fn refines(coarser: &Partition, finer: &Partition) -> bool {
    let (lc, lf) = (coarser.labels(), finer.labels());
    (0..lc.len()).all(|x| (0..lc.len()).all(|y| lf[x] != lf[y] || lc[x] == lc[y]))
}

/// Order axioms and monotonicity of class count and entropy over every
/// partition of an `n`-point set.
pub fn lattice_properties(n: usize, samples: usize) -> Result<String, String> {
    let ps = all_partitions(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a77);
    let dists: Vec<Distribution> = (0..samples)
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            Distribution::per_point(w.into_iter().map(|x| x / s).collect())
        })
        .collect();
    let entropy: Vec<Vec<f64>> = ps
        .iter()
        .map(|p| dists.iter().map(|d| shannon_entropy(p, d).unwrap()).collect())
        .collect();
    let leq: Vec<Vec<bool>> = ps
        .iter()
        .map(|a| ps.iter().map(|b| loi_leq(a, b).unwrap()).collect())
        .collect();
    let k = ps.len();
    let mut comparable = 0;
    for i in 0..k {
        if !leq[i][i] {
            return Err(format!("not reflexive at {:?}", ps[i].labels()));
        }
        for j in 0..k {
            if leq[i][j] != refines(&ps[i], &ps[j]) {
                return Err(format!(
                    "order disagrees with definition at {:?} {:?}",
                    ps[i].labels(),
                    ps[j].labels()
                ));
            }
            if !leq[i][j] {
                continue;
            }
            comparable += 1;
            if i != j && leq[j][i] {
                return Err(format!(
                    "not antisymmetric at {:?} {:?}",
                    ps[i].labels(),
                    ps[j].labels()
                ));
            }
            if ps[i].class_count() > ps[j].class_count() {
                return Err(format!(
                    "class count drops from {:?} to {:?}",
                    ps[i].labels(),
                    ps[j].labels()
                ));
            }
            if let Some(d) = (0..samples).find(|&d| entropy[i][d] > entropy[j][d] + 1e-9) {
                return Err(format!("entropy drops under distribution {}", d));
            }
            if leq[j].iter().zip(&leq[i]).any(|(jl, il)| *jl && !*il) {
                return Err("not transitive".into());
            }
        }
    }
    Ok(format!(
        "{} partitions, {} ordered pairs, {} distributions",
        k, comparable, samples
    ))
}
