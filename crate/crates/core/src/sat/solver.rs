//! CDCL solver: two watched literals, first-UIP learning, decisions in
//! ascending variable order with saved phases.
//!
//! Runs are deterministic: the same clause list always yields the same
//! model and the same statistics.

use super::cnf::{Cnf, Lit};

const NO_REASON: u32 = u32::MAX;
const UNDEF: u8 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverConfig {
    /// Give up with [`SatResult::Unknown`] after this many conflicts.
    pub conflict_budget: Option<u64>,
    /// Luby restarts (off by default).
    pub restarts: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// Value of every variable.
    Sat(Vec<bool>),
    Unsat,
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub learnt: u64,
    pub restarts: u64,
}

#[derive(Clone, Copy)]
struct Watch {
    clause: u32,
    blocker: Lit,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
}

struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watch>>,
    /// 0 false, 1 true, 2 unassigned.
    value: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    next_var: usize,
    learnt_count: usize,
    max_learnt: usize,
    stats: SolveStats,
}

fn luby(mut i: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

impl Solver {
    fn new(num_vars: usize) -> Self {
        Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            value: vec![UNDEF; num_vars],
            level: vec![0; num_vars],
            reason: vec![NO_REASON; num_vars],
            phase: vec![false; num_vars],
            seen: vec![false; num_vars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            next_var: 0,
            learnt_count: 0,
            max_learnt: 0,
            stats: SolveStats::default(),
        }
    }

    fn lit_value(&self, l: Lit) -> u8 {
        let v = self.value[l.var() as usize];
        if v == UNDEF {
            UNDEF
        } else {
            v ^ l.is_negated() as u8
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var() as usize;
        self.value[v] = !l.is_negated() as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let idx = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watch {
            clause: idx,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watch {
            clause: idx,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
        });
        idx
    }

    /// Add an input clause at level 0. Returns false if the formula became
    /// unsatisfiable.
    fn add_input(&mut self, clause: &[Lit]) -> bool {
        let mut lits: Vec<Lit> = clause.to_vec();
        lits.sort();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        lits.retain(|&l| self.lit_value(l) != 0);
        if lits.iter().any(|&l| self.lit_value(l) == 1) {
            return true;
        }
        match lits.len() {
            0 => false,
            1 => {
                self.enqueue(lits[0], NO_REASON);
                self.propagate().is_none()
            }
            _ => {
                self.attach(lits, false);
                true
            }
        }
    }

    /// Unit propagation; returns a conflicting clause.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let ci = w.clause as usize;
                if self.clauses[ci].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[ci].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[ci].lits[0];
                if first != w.blocker && self.lit_value(first) == 1 {
                    ws[j] = Watch {
                        clause: w.clause,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[ci].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[ci].lits[k];
                    if self.lit_value(l) != 0 {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[l.code()].push(Watch {
                            clause: w.clause,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    clause: w.clause,
                    blocker: first,
                };
                j += 1;
                if self.lit_value(first) == 0 {
                    conflict = Some(w.clause);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, w.clause);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    /// First-UIP clause for `conflict`, asserting literal first, and the
    /// level to return to.
    fn analyze(&mut self, conflict: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::pos(0)];
        let mut pending = 0;
        let mut idx = self.trail.len();
        let mut clause = conflict;
        let mut p: Option<Lit> = None;
        let current = self.decision_level();
        loop {
            let start = if p.is_some() { 1 } else { 0 };
            let len = self.clauses[clause as usize].lits.len();
            for k in start..len {
                let q = self.clauses[clause as usize].lits[k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            self.seen[lit.var() as usize] = false;
            p = Some(lit);
            pending -= 1;
            if pending == 0 {
                break;
            }
            clause = self.reason[lit.var() as usize];
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by the rest of the clause.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if i == 0 {
                    return true;
                }
                let r = self.reason[l.var() as usize];
                if r == NO_REASON {
                    return true;
                }
                self.clauses[r as usize].lits[1..].iter().any(|q| {
                    let v = q.var() as usize;
                    !self.seen[v] && self.level[v] > 0
                })
            })
            .collect();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(l, _)| l)
            .collect();

        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[best].var() as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            back = self.level[learnt[1].var() as usize];
        }
        (learnt, back)
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var() as usize;
            self.phase[v] = !l.is_negated();
            self.value[v] = UNDEF;
            self.reason[v] = NO_REASON;
            if v < self.next_var {
                self.next_var = v;
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn locked(&self, ci: usize) -> bool {
        let l = self.clauses[ci].lits[0];
        self.reason[l.var() as usize] == ci as u32 && self.lit_value(l) == 1
    }

    /// Delete the longer half of the learnt clauses that are not reasons.
    fn reduce(&mut self) {
        let mut cand: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| self.clauses[i].learnt && !self.clauses[i].deleted && !self.locked(i))
            .collect();
        cand.sort_by_key(|&i| (std::cmp::Reverse(self.clauses[i].lits.len()), i));
        let n = cand.len() / 2;
        for &i in &cand[..n] {
            self.clauses[i].deleted = true;
            self.clauses[i].lits = Vec::new();
        }
        self.learnt_count -= n;
        for ws in &mut self.watches {
            ws.retain(|w| !self.clauses[w.clause as usize].deleted);
        }
    }

    fn pick(&mut self) -> Option<Lit> {
        while self.next_var < self.value.len() {
            let v = self.next_var;
            if self.value[v] == UNDEF {
                return Some(Lit::new(v as u32, !self.phase[v]));
            }
            self.next_var += 1;
        }
        None
    }

    fn run(&mut self, cfg: &SolverConfig) -> Option<bool> {
        if self.propagate().is_some() {
            return Some(false);
        }
        let mut restart_idx = 0;
        let mut restart_at = if cfg.restarts { 100 * luby(0) } else { u64::MAX };
        let mut since_restart = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    return Some(false);
                }
                let (learnt, back) = self.analyze(conflict);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let asserting = learnt[0];
                    let ci = self.attach(learnt, true);
                    self.learnt_count += 1;
                    self.stats.learnt += 1;
                    self.enqueue(asserting, ci);
                }
                if let Some(b) = cfg.conflict_budget {
                    if self.stats.conflicts >= b {
                        return None;
                    }
                }
                continue;
            }
            if since_restart >= restart_at {
                self.stats.restarts += 1;
                restart_idx += 1;
                restart_at = 100 * luby(restart_idx);
                since_restart = 0;
                self.backtrack(0);
            }
            if self.learnt_count >= self.max_learnt {
                self.reduce();
                self.max_learnt += self.max_learnt / 10;
            }
            match self.pick() {
                None => return Some(true),
                Some(l) => {
                    self.stats.decisions += 1;
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(l, NO_REASON);
                }
            }
        }
    }
}

/// Decide satisfiability of `cnf`. Models are checked against every input
/// clause before they are returned.
pub fn solve(cnf: &Cnf, cfg: &SolverConfig) -> (SatResult, SolveStats) {
    let mut s = Solver::new(cnf.num_vars as usize);
    s.max_learnt = (cnf.clauses.len() / 3).max(10_000);
    for c in &cnf.clauses {
        if !s.add_input(c) {
            return (SatResult::Unsat, s.stats);
        }
    }
    let result = match s.run(cfg) {
        Some(true) => {
            let model: Vec<bool> = s.value.iter().map(|&v| v == 1).collect();
            assert!(
                cnf.satisfied_by(&model),
                "solver returned a model that violates an input clause"
            );
            SatResult::Sat(model)
        }
        Some(false) => SatResult::Unsat,
        None => SatResult::Unknown,
    };
    (result, s.stats)
}
