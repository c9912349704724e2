//! End-to-end policy checks.

use std::time::{Duration, Instant};

use crate::lang::Analysed;
use crate::sat::{encode, solve, Encoding, Goal, SatResult, SolveStats, SolverConfig};
use crate::ssa::{build_ssa, unwind_program, AssertKind, SsaProgram, UnwindConfig};

use super::counterexample::{decode_counterexample, Counterexample};
use super::driver::{synthesize_driver, DriverProgram};
use super::PolicyError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub unwind: u32,
    pub unwinding_assertions: bool,
    pub solver: SolverConfig,
    /// Largest number of copies a driver may contain.
    pub max_copies: u32,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            unwind: 8,
            unwinding_assertions: true,
            solver: SolverConfig::default(),
            max_copies: 1025,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Violated(Box<Counterexample>),
    /// No violation within this many loop iterations.
    VerifiedBounded(u32),
    VerifiedComplete,
    /// The assumptions cannot hold; at most this many distinctions exist.
    Vacuous(u32),
    /// Some loop may run longer than the unwinding bound.
    InsufficientBound(u32),
    /// The solver ran out of budget.
    Unknown,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Violated(_) => "Violated",
            Verdict::VerifiedBounded(_) => "VerifiedBounded",
            Verdict::VerifiedComplete => "VerifiedComplete",
            Verdict::Vacuous(_) => "Vacuous",
            Verdict::InsufficientBound(_) => "InsufficientBound",
            Verdict::Unknown => "Unknown",
        }
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::VerifiedBounded(_) | Verdict::VerifiedComplete)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckStats {
    pub solve_time: Duration,
    pub vars: u32,
    pub clauses: usize,
    pub unwind: u32,
    pub queries: u32,
    pub solver: SolveStats,
}

impl CheckStats {
    fn add(&mut self, enc: &Encoding, st: SolveStats, t: Duration) {
        self.queries += 1;
        self.solve_time += t;
        self.vars = self.vars.max(enc.cnf.num_vars);
        self.clauses = self.clauses.max(enc.cnf.clauses.len());
        self.solver.decisions += st.decisions;
        self.solver.propagations += st.propagations;
        self.solver.conflicts += st.conflicts;
        self.solver.learnt += st.learnt;
        self.solver.restarts += st.restarts;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyCheckResult {
    pub n: u32,
    pub verdict: Verdict,
    pub stats: CheckStats,
}

/// Driver for threshold `n`, unwound and in SSA form.
pub fn driver_ssa(a: &Analysed, n: u32, cfg: &CheckConfig) -> Result<(DriverProgram, SsaProgram), PolicyError> {
    let d = synthesize_driver(a, n, cfg.max_copies)?;
    let unwound = unwind_program(
        &d.program,
        UnwindConfig {
            bound: cfg.unwind,
            check: cfg.unwinding_assertions,
        },
    );
    let ssa = build_ssa(&unwound)?;
    Ok((d, ssa))
}

fn run(ssa: &SsaProgram, goal: Goal, cfg: &CheckConfig, stats: &mut CheckStats) -> (Encoding, SatResult) {
    let enc = encode(ssa, goal);
    let t = Instant::now();
    let (r, st) = solve(&enc.cnf, &cfg.solver);
    stats.add(&enc, st, t.elapsed());
    (enc, r)
}

/// Is there a run of the driver for `n` that satisfies its assumptions?
fn feasible(a: &Analysed, n: u32, cfg: &CheckConfig, stats: &mut CheckStats) -> Result<Option<bool>, PolicyError> {
    let (_, ssa) = driver_ssa(a, n, cfg)?;
    Ok(match run(&ssa, Goal::Feasible, cfg, stats).1 {
        SatResult::Sat(_) => Some(true),
        SatResult::Unsat => Some(false),
        SatResult::Unknown => None,
    })
}

/// Check whether the program makes more than `n` distinctions.
pub fn check_policy(a: &Analysed, n: u32, cfg: &CheckConfig) -> Result<PolicyCheckResult, PolicyError> {
    let mut stats = CheckStats {
        unwind: cfg.unwind,
        ..CheckStats::default()
    };
    let (d, ssa) = driver_ssa(a, n, cfg)?;
    let done = |verdict, stats| Ok(PolicyCheckResult { n, verdict, stats });
    let (enc, r) = run(&ssa, Goal::Violate(AssertKind::Property), cfg, &mut stats);
    match r {
        SatResult::Sat(model) => {
            let cex = decode_counterexample(a, &d, &ssa, &enc, &model)?;
            return done(Verdict::Violated(Box::new(cex)), stats);
        }
        SatResult::Unknown => return done(Verdict::Unknown, stats),
        SatResult::Unsat => {}
    }
    drop(enc);
    if cfg.unwinding_assertions {
        match run(&ssa, Goal::Violate(AssertKind::Unwinding), cfg, &mut stats).1 {
            SatResult::Sat(_) => return done(Verdict::InsufficientBound(cfg.unwind), stats),
            SatResult::Unknown => return done(Verdict::Unknown, stats),
            SatResult::Unsat => {}
        }
    }
    if n >= 2 {
        match run(&ssa, Goal::Feasible, cfg, &mut stats).1 {
            SatResult::Unknown => return done(Verdict::Unknown, stats),
            SatResult::Sat(_) => {}
            SatResult::Unsat => {
                let mut m = n - 1;
                while m > 1 {
                    match feasible(a, m, cfg, &mut stats)? {
                        None => return done(Verdict::Unknown, stats),
                        Some(true) => break,
                        Some(false) => m -= 1,
                    }
                }
                return done(Verdict::Vacuous(m), stats);
            }
        }
    }
    if cfg.unwinding_assertions {
        done(Verdict::VerifiedComplete, stats)
    } else {
        done(Verdict::VerifiedBounded(cfg.unwind), stats)
    }
}
