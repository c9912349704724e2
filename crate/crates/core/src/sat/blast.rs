//! Tseitin bit-blasting of SSA programs.
//!
//! Gates are folded when an input is constant and shared through a
//! structural hash table, so identical sub-circuits in different copies of
//! a program cost nothing. Literal 1 is the constant true.

use std::collections::HashMap;

use crate::bits::{BitVec, WordOp};
use crate::nondet::NondetKey;
use crate::ssa::{AssertKind, SsaExpr, SsaProgram, SsaStmt, SsaVar};

use super::cnf::{Cnf, Lit};

/// What the formula asks for, on top of the program constraints and its
/// assumptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Goal {
    /// Nothing more: is any run consistent with the assumptions?
    Feasible,
    /// Some assertion of this kind fails.
    Violate(AssertKind),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Gate {
    And(Lit, Lit),
    Xor(Lit, Lit),
    Ite(Lit, Lit, Lit),
}

pub struct Blaster {
    pub cnf: Cnf,
    t: Lit,
    gates: HashMap<Gate, Lit>,
}

impl Default for Blaster {
    fn default() -> Self {
        Blaster::new()
    }
}

impl Blaster {
    pub fn new() -> Self {
        let mut cnf = Cnf::default();
        let t = cnf.new_var();
        cnf.add_clause(vec![t]);
        Blaster {
            cnf,
            t,
            gates: HashMap::new(),
        }
    }

    pub fn tt(&self) -> Lit {
        self.t
    }

    pub fn ff(&self) -> Lit {
        !self.t
    }

    pub fn constant(&self, b: bool) -> Lit {
        if b {
            self.t
        } else {
            !self.t
        }
    }

    fn const_of(&self, l: Lit) -> Option<bool> {
        if l == self.t {
            Some(true)
        } else if l == !self.t {
            Some(false)
        } else {
            None
        }
    }

    pub fn fresh(&mut self) -> Lit {
        self.cnf.new_var()
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.const_of(a), self.const_of(b)) {
            (Some(false), _) | (_, Some(false)) => return self.ff(),
            (Some(true), _) => return b,
            (_, Some(true)) => return a,
            _ => {}
        }
        if a == b {
            return a;
        }
        if a == !b {
            return self.ff();
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.gates.get(&Gate::And(a, b)) {
            return g;
        }
        let g = self.fresh();
        self.cnf.add_clause(vec![!g, a]);
        self.cnf.add_clause(vec![!g, b]);
        self.cnf.add_clause(vec![g, !a, !b]);
        self.gates.insert(Gate::And(a, b), g);
        g
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.const_of(a), self.const_of(b)) {
            (Some(x), _) => return if x { !b } else { b },
            (_, Some(y)) => return if y { !a } else { a },
            _ => {}
        }
        if a == b {
            return self.ff();
        }
        if a == !b {
            return self.tt();
        }
        let flip = a.is_negated() != b.is_negated();
        let (a, b) = (Lit::pos(a.var()), Lit::pos(b.var()));
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let g = match self.gates.get(&Gate::Xor(a, b)) {
            Some(&g) => g,
            None => {
                let g = self.fresh();
                self.cnf.add_clause(vec![!g, a, b]);
                self.cnf.add_clause(vec![!g, !a, !b]);
                self.cnf.add_clause(vec![g, !a, b]);
                self.cnf.add_clause(vec![g, a, !b]);
                self.gates.insert(Gate::Xor(a, b), g);
                g
            }
        };
        if flip {
            !g
        } else {
            g
        }
    }

    pub fn ite(&mut self, c: Lit, t: Lit, e: Lit) -> Lit {
        match self.const_of(c) {
            Some(true) => return t,
            Some(false) => return e,
            None => {}
        }
        if t == e {
            return t;
        }
        if t == !e {
            return self.xor(c, e);
        }
        match (self.const_of(t), self.const_of(e)) {
            (Some(true), _) => return self.or(c, e),
            (Some(false), _) => return self.and(!c, e),
            (_, Some(true)) => return self.or(!c, t),
            (_, Some(false)) => return self.and(c, t),
            _ => {}
        }
        if c == t {
            return self.or(c, e);
        }
        if c == !t {
            return self.and(!c, e);
        }
        if c == e {
            return self.and(c, t);
        }
        if c == !e {
            return self.or(!c, t);
        }
        let (c, t, e) = if c.is_negated() { (!c, e, t) } else { (c, t, e) };
        if let Some(&g) = self.gates.get(&Gate::Ite(c, t, e)) {
            return g;
        }
        let g = self.fresh();
        self.cnf.add_clause(vec![!g, !c, t]);
        self.cnf.add_clause(vec![!g, c, e]);
        self.cnf.add_clause(vec![g, !c, !t]);
        self.cnf.add_clause(vec![g, c, !e]);
        self.gates.insert(Gate::Ite(c, t, e), g);
        g
    }

    pub fn and_all(&mut self, lits: &[Lit]) -> Lit {
        lits.iter().fold(self.tt(), |acc, &l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: &[Lit]) -> Lit {
        lits.iter().fold(self.ff(), |acc, &l| self.or(acc, l))
    }

    pub fn konst(&self, b: &BitVec) -> Vec<Lit> {
        (0..b.width()).map(|i| self.constant(b.bit(i))).collect()
    }

    fn add(&mut self, a: &[Lit], b: &[Lit], carry_in: Lit) -> Vec<Lit> {
        let mut c = carry_in;
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.xor(x, y);
            out.push(self.xor(xy, c));
            let g = self.and(x, y);
            let p = self.and(c, xy);
            c = self.or(g, p);
        }
        out
    }

    fn sub(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let nb: Vec<Lit> = b.iter().map(|&l| !l).collect();
        let t = self.tt();
        self.add(a, &nb, t)
    }

    fn neg(&mut self, a: &[Lit]) -> Vec<Lit> {
        let zero = vec![self.ff(); a.len()];
        self.sub(&zero, a)
    }

    fn mul(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let w = a.len();
        let mut acc = vec![self.ff(); w];
        for (i, &bi) in b.iter().enumerate() {
            if self.const_of(bi) == Some(false) {
                continue;
            }
            let mut partial = vec![self.ff(); w];
            for j in 0..w - i {
                partial[i + j] = self.and(a[j], bi);
            }
            let f = self.ff();
            acc = self.add(&acc, &partial, f);
        }
        acc
    }

    /// `a < b`, unsigned.
    fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = self.ff();
        for (&x, &y) in a.iter().zip(b) {
            let here = self.and(!x, y);
            let same = self.xor(x, y);
            let keep = self.and(!same, lt);
            lt = self.or(here, keep);
        }
        lt
    }

    fn slt(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let flip = |v: &[Lit]| {
            let mut v = v.to_vec();
            if let Some(last) = v.last_mut() {
                *last = !*last;
            }
            v
        };
        self.ult(&flip(a), &flip(b))
    }

    fn equal(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let bits: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| !self.xor(x, y)).collect();
        self.and_all(&bits)
    }

    fn mux(&mut self, c: Lit, t: &[Lit], e: &[Lit]) -> Vec<Lit> {
        t.iter().zip(e).map(|(&x, &y)| self.ite(c, x, y)).collect()
    }

    /// Restoring division; division by zero gives an all-ones quotient and
    /// the dividend as remainder.
    fn udivrem(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let w = a.len();
        let f = self.ff();
        let mut bx = b.to_vec();
        bx.push(f);
        let mut r = vec![f; w + 1];
        let mut q = vec![f; w];
        for i in (0..w).rev() {
            let mut shifted = Vec::with_capacity(w + 1);
            shifted.push(a[i]);
            shifted.extend_from_slice(&r[..w]);
            let lt = self.ult(&shifted, &bx);
            let ge = !lt;
            let diff = self.sub(&shifted, &bx);
            r = self.mux(ge, &diff, &shifted);
            q[i] = ge;
        }
        r.truncate(w);
        (q, r)
    }

    fn shift(&mut self, op: WordOp, a: &[Lit], amount: &[Lit]) -> Vec<Lit> {
        let w = a.len();
        let fill = match op {
            WordOp::AShr => *a.last().unwrap(),
            _ => self.ff(),
        };
        let mut cur = a.to_vec();
        let mut overflow = self.ff();
        for (k, &s) in amount.iter().enumerate() {
            let dist = if k < 63 { 1u64 << k } else { u64::MAX };
            if dist >= w as u64 {
                overflow = self.or(overflow, s);
                continue;
            }
            let d = dist as usize;
            let moved: Vec<Lit> = (0..w)
                .map(|i| match op {
                    WordOp::Shl => {
                        if i >= d {
                            cur[i - d]
                        } else {
                            self.ff()
                        }
                    }
                    _ => {
                        if i + d < w {
                            cur[i + d]
                        } else {
                            fill
                        }
                    }
                })
                .collect();
            cur = self.mux(s, &moved, &cur);
        }
        let filled = vec![fill; w];
        self.mux(overflow, &filled, &cur)
    }

    pub fn word_op(&mut self, op: WordOp, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        match op {
            WordOp::Add => {
                let f = self.ff();
                self.add(a, b, f)
            }
            WordOp::Sub => self.sub(a, b),
            WordOp::Mul => self.mul(a, b),
            WordOp::UDiv => self.udivrem(a, b).0,
            WordOp::URem => self.udivrem(a, b).1,
            WordOp::SDiv | WordOp::SRem => {
                let (sa, sb) = (*a.last().unwrap(), *b.last().unwrap());
                let na = self.neg(a);
                let nb = self.neg(b);
                let ua = self.mux(sa, &na, a);
                let ub = self.mux(sb, &nb, b);
                let (q, r) = self.udivrem(&ua, &ub);
                if op == WordOp::SDiv {
                    let s = self.xor(sa, sb);
                    let nq = self.neg(&q);
                    self.mux(s, &nq, &q)
                } else {
                    let nr = self.neg(&r);
                    self.mux(sa, &nr, &r)
                }
            }
            WordOp::And => a.iter().zip(b).map(|(&x, &y)| self.and(x, y)).collect(),
            WordOp::Or => a.iter().zip(b).map(|(&x, &y)| self.or(x, y)).collect(),
            WordOp::Xor => a.iter().zip(b).map(|(&x, &y)| self.xor(x, y)).collect(),
            WordOp::Shl | WordOp::LShr | WordOp::AShr => self.shift(op, a, b),
            WordOp::Eq => vec![self.equal(a, b)],
            WordOp::Ne => vec![!self.equal(a, b)],
            WordOp::ULt => vec![self.ult(a, b)],
            WordOp::ULe => vec![!self.ult(b, a)],
            WordOp::SLt => vec![self.slt(a, b)],
            WordOp::SLe => vec![!self.slt(b, a)],
        }
    }
}

/// A program encoded as clauses, with the literals of every SSA bit.
pub struct Encoding {
    pub cnf: Cnf,
    /// Per SSA variable, its bits from the low end.
    pub bits: Vec<Vec<Lit>>,
}

impl Encoding {
    pub fn var_value(&self, model: &[bool], v: SsaVar) -> BitVec {
        let bits: Vec<bool> = self.bits[v as usize]
            .iter()
            .map(|l| model[l.var() as usize] != l.is_negated())
            .collect();
        BitVec::from_bits(&bits)
    }

    /// Values of the nondeterministic choices in a model.
    pub fn nondet_values(&self, p: &SsaProgram, model: &[bool]) -> HashMap<NondetKey, u64> {
        p.nondet_vars()
            .map(|(v, k)| (k.clone(), self.var_value(model, v).to_u64()))
            .collect()
    }

    /// Values of the free inputs in a model.
    pub fn input_values(&self, p: &SsaProgram, model: &[bool]) -> HashMap<String, BitVec> {
        p.stmts
            .iter()
            .filter_map(|s| match s {
                SsaStmt::Input { var, name } => Some((name.clone(), self.var_value(model, *var))),
                _ => None,
            })
            .collect()
    }
}

struct ProgramBlaster<'p> {
    b: Blaster,
    prog: &'p SsaProgram,
    /// Literals an SSA variable's uses read.
    vals: Vec<Option<Vec<Lit>>>,
    /// Named literals of each SSA variable.
    names: Vec<Vec<Lit>>,
    memo: HashMap<*const SsaExpr, Vec<Lit>>,
}

impl ProgramBlaster<'_> {
    fn expr(&mut self, e: &SsaExpr) -> Vec<Lit> {
        let key = e as *const SsaExpr;
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let out = match e {
            SsaExpr::Const(b) => self.b.konst(b),
            SsaExpr::Var(v, _) => self.vals[*v as usize]
                .clone()
                .unwrap_or_else(|| panic!("{} used before definition", self.prog.vars[*v as usize].name)),
            SsaExpr::Not(a) => self.expr(a).into_iter().map(|l| !l).collect(),
            SsaExpr::Bin(op, a, c) => {
                let x = self.expr(a);
                let y = self.expr(c);
                self.b.word_op(*op, &x, &y)
            }
            SsaExpr::Ite(c, t, f) => {
                let c = self.expr(c)[0];
                let t = self.expr(t);
                let f = self.expr(f);
                self.b.mux(c, &t, &f)
            }
            SsaExpr::Extract(a, lo, w) => {
                let x = self.expr(a);
                x[*lo as usize..(*lo + *w) as usize].to_vec()
            }
            SsaExpr::Concat(ps) => ps.iter().flat_map(|p| self.expr(p)).collect(),
            SsaExpr::ZExt(a, w) => {
                let mut x = self.expr(a);
                x.resize(*w as usize, self.b.ff());
                x
            }
            SsaExpr::SExt(a, w) => {
                let mut x = self.expr(a);
                let s = x.last().copied().unwrap_or(self.b.ff());
                x.resize(*w as usize, s);
                x
            }
        };
        self.memo.insert(key, out.clone());
        out
    }

    fn free(&mut self, var: SsaVar) {
        let w = self.prog.vars[var as usize].width;
        let lits: Vec<Lit> = (0..w).map(|_| self.b.fresh()).collect();
        self.vals[var as usize] = Some(lits.clone());
        self.names[var as usize] = lits;
    }
}

/// Encode the program's constraints, its assumptions and `goal`. Unwinding
/// assertions are assumed unless they are the goal; property assertions
/// only take part as the goal.
pub fn encode(p: &SsaProgram, goal: Goal) -> Encoding {
    let mut pb = ProgramBlaster {
        b: Blaster::new(),
        prog: p,
        vals: vec![None; p.vars.len()],
        names: vec![Vec::new(); p.vars.len()],
        memo: HashMap::new(),
    };
    let mut failures = Vec::new();
    for s in &p.stmts {
        match s {
            SsaStmt::Assign { var, expr } => {
                let lits = pb.expr(expr);
                let named: Vec<Lit> = lits
                    .iter()
                    .map(|&l| {
                        let x = pb.b.fresh();
                        match pb.b.const_of(l) {
                            Some(v) => pb.b.cnf.add_clause(vec![if v { x } else { !x }]),
                            None => {
                                pb.b.cnf.add_clause(vec![!x, l]);
                                pb.b.cnf.add_clause(vec![x, !l]);
                            }
                        }
                        x
                    })
                    .collect();
                pb.vals[*var as usize] = Some(lits);
                pb.names[*var as usize] = named;
            }
            SsaStmt::Nondet { var, .. } | SsaStmt::Input { var, .. } => pb.free(*var),
            SsaStmt::Assume { guard, cond, .. } => {
                let g = pb.expr(guard)[0];
                let c = pb.expr(cond)[0];
                let mut ok = pb.b.or(!g, c);
                if goal == Goal::Violate(AssertKind::Unwinding) {
                    // A run that already overran a loop ends there.
                    let overran = pb.b.or_all(&failures);
                    ok = pb.b.or(ok, overran);
                }
                if pb.b.const_of(ok) != Some(true) {
                    pb.b.cnf.add_clause(vec![ok]);
                }
            }
            SsaStmt::Assert { guard, cond, kind, .. } => {
                if goal == Goal::Violate(*kind) {
                    let g = pb.expr(guard)[0];
                    let c = pb.expr(cond)[0];
                    failures.push(pb.b.and(g, !c));
                } else if *kind == AssertKind::Unwinding {
                    let g = pb.expr(guard)[0];
                    let c = pb.expr(cond)[0];
                    let ok = pb.b.or(!g, c);
                    if pb.b.const_of(ok) != Some(true) {
                        pb.b.cnf.add_clause(vec![ok]);
                    }
                }
            }
        }
    }
    pb.b.cnf.claim_start = pb.b.cnf.clauses.len();
    if let Goal::Violate(_) = goal {
        let fail = pb.b.or_all(&failures);
        pb.b.cnf.add_clause(vec![fail]);
    }
    let names = pb.names;
    let mut cnf = pb.b.cnf;
    for (v, lits) in names.iter().enumerate() {
        let info = &p.vars[v];
        for (i, &l) in lits.iter().enumerate() {
            cnf.names.push((format!("{}[{}]", info.name, i), l));
        }
    }
    Encoding { cnf, bits: names }
}
