use std::rc::Rc;

use crate::bits::{eval_word_op, mask, BitVec, WordOp};
use crate::lang::ast::Span;
use crate::nondet::NondetKey;

pub type SsaVar = u32;

/// Where an SSA variable came from, for traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub function: String,
    pub var: String,
    /// Index of the top-level call the variable belongs to (0 for the entry).
    pub copy: u32,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub width: u32,
    pub origin: Origin,
}

/// Expressions are shared trees; equal subtrees compare structurally.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SsaExpr {
    Const(BitVec),
    Var(SsaVar, u32),
    Not(Rc<SsaExpr>),
    Bin(WordOp, Rc<SsaExpr>, Rc<SsaExpr>),
    Ite(Rc<SsaExpr>, Rc<SsaExpr>, Rc<SsaExpr>),
    Extract(Rc<SsaExpr>, u32, u32),
    /// Parts in order from the low bits up.
    Concat(Vec<SsaExpr>),
    ZExt(Rc<SsaExpr>, u32),
    SExt(Rc<SsaExpr>, u32),
}

impl SsaExpr {
    pub fn width(&self) -> u32 {
        match self {
            SsaExpr::Const(b) => b.width(),
            SsaExpr::Var(_, w) => *w,
            SsaExpr::Not(a) => a.width(),
            SsaExpr::Bin(op, a, _) => {
                if op.is_predicate() {
                    1
                } else {
                    a.width()
                }
            }
            SsaExpr::Ite(_, t, _) => t.width(),
            SsaExpr::Extract(_, _, w) => *w,
            SsaExpr::Concat(parts) => parts.iter().map(|p| p.width()).sum(),
            SsaExpr::ZExt(_, w) | SsaExpr::SExt(_, w) => *w,
        }
    }

    pub fn konst(width: u32, v: u64) -> SsaExpr {
        SsaExpr::Const(BitVec::from_u64(width, v))
    }

    pub fn tt() -> SsaExpr {
        SsaExpr::konst(1, 1)
    }

    pub fn ff() -> SsaExpr {
        SsaExpr::konst(1, 0)
    }

    pub fn as_const(&self) -> Option<&BitVec> {
        match self {
            SsaExpr::Const(b) => Some(b),
            _ => None,
        }
    }

    /// Constant scalar value (at most 64 bits).
    pub fn as_u64(&self) -> Option<u64> {
        match self {
            SsaExpr::Const(b) if b.width() <= 64 => Some(b.to_u64()),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_u64() == Some(1) && self.width() == 1
    }

    pub fn is_false(&self) -> bool {
        self.as_u64() == Some(0) && self.width() == 1
    }

    pub fn negate(a: SsaExpr) -> SsaExpr {
        match a {
            SsaExpr::Const(b) => {
                let w = b.width();
                let bits: Vec<bool> = (0..w).map(|i| !b.bit(i)).collect();
                SsaExpr::Const(BitVec::from_bits(&bits))
            }
            SsaExpr::Not(x) => (*x).clone(),
            a => SsaExpr::Not(Rc::new(a)),
        }
    }

    pub fn bin(op: WordOp, a: SsaExpr, b: SsaExpr) -> SsaExpr {
        let w = a.width();
        debug_assert!(
            op.is_shift() || b.width() == w,
            "{:?} on {} and {} bits",
            op,
            w,
            b.width()
        );
        if let (Some(x), Some(y)) = (a.as_u64(), b.as_u64()) {
            if w <= 64 && b.width() <= 64 {
                let r = eval_word_op(op, x, y, w, b.width());
                return SsaExpr::konst(if op.is_predicate() { 1 } else { w }, r);
            }
        }
        let zero = |e: &SsaExpr| e.as_u64() == Some(0);
        let ones = |e: &SsaExpr| w <= 64 && e.as_u64() == Some(mask(w));
        match op {
            WordOp::Add | WordOp::Or | WordOp::Xor if zero(&b) => return a,
            WordOp::Add | WordOp::Or | WordOp::Xor if zero(&a) => return b,
            WordOp::Sub | WordOp::Shl | WordOp::LShr | WordOp::AShr if zero(&b) => return a,
            WordOp::And | WordOp::Mul if zero(&a) || zero(&b) => return SsaExpr::konst(w, 0),
            WordOp::And if ones(&b) => return a,
            WordOp::And if ones(&a) => return b,
            WordOp::And | WordOp::Or if a == b => return a,
            WordOp::Or if w == 1 && (a.is_true() || b.is_true()) => return SsaExpr::tt(),
            WordOp::Xor | WordOp::Sub if a == b => return SsaExpr::konst(w, 0),
            WordOp::Eq | WordOp::ULe | WordOp::SLe if a == b => return SsaExpr::tt(),
            WordOp::Ne | WordOp::ULt | WordOp::SLt if a == b => return SsaExpr::ff(),
            WordOp::Eq if w == 1 && b.is_true() => return a,
            WordOp::Eq if w == 1 && b.is_false() => return SsaExpr::negate(a),
            WordOp::Ne if w == 1 && b.is_false() => return a,
            _ => {}
        }
        SsaExpr::Bin(op, Rc::new(a), Rc::new(b))
    }

    pub fn and(a: SsaExpr, b: SsaExpr) -> SsaExpr {
        SsaExpr::bin(WordOp::And, a, b)
    }

    pub fn or(a: SsaExpr, b: SsaExpr) -> SsaExpr {
        SsaExpr::bin(WordOp::Or, a, b)
    }

    pub fn eq(a: SsaExpr, b: SsaExpr) -> SsaExpr {
        SsaExpr::bin(WordOp::Eq, a, b)
    }

    pub fn ite(c: SsaExpr, t: SsaExpr, e: SsaExpr) -> SsaExpr {
        debug_assert_eq!(c.width(), 1);
        debug_assert_eq!(t.width(), e.width());
        if c.is_true() || t == e {
            return t;
        }
        if c.is_false() {
            return e;
        }
        if t.width() == 1 {
            if t.is_true() && e.is_false() {
                return c;
            }
            if t.is_false() && e.is_true() {
                return SsaExpr::negate(c);
            }
        }
        if let SsaExpr::Not(inner) = &c {
            return SsaExpr::ite((**inner).clone(), e, t);
        }
        SsaExpr::Ite(Rc::new(c), Rc::new(t), Rc::new(e))
    }

    pub fn extract(a: SsaExpr, lo: u32, width: u32) -> SsaExpr {
        let aw = a.width();
        debug_assert!(lo + width <= aw, "extract {}+{} of {}", lo, width, aw);
        if lo == 0 && width == aw {
            return a;
        }
        if width == 0 {
            return SsaExpr::Const(BitVec::zero(0));
        }
        match a {
            SsaExpr::Const(b) => SsaExpr::Const(b.extract(lo, width)),
            SsaExpr::Extract(inner, l2, _) => SsaExpr::extract((*inner).clone(), l2 + lo, width),
            SsaExpr::Concat(parts) => {
                let mut out = Vec::new();
                let mut at = 0;
                for p in parts {
                    let pw = p.width();
                    let (s, e) = (at.max(lo), (at + pw).min(lo + width));
                    if s < e {
                        out.push(SsaExpr::extract(p, s - at, e - s));
                    }
                    at += pw;
                    if at >= lo + width {
                        break;
                    }
                }
                SsaExpr::concat(out)
            }
            SsaExpr::ZExt(inner, _) if lo + width <= inner.width() => SsaExpr::extract((*inner).clone(), lo, width),
            SsaExpr::ZExt(inner, _) if lo >= inner.width() => SsaExpr::konst(width, 0),
            SsaExpr::SExt(inner, _) if lo + width <= inner.width() => SsaExpr::extract((*inner).clone(), lo, width),
            SsaExpr::Ite(c, t, e) if t.as_const().is_some() || e.as_const().is_some() => SsaExpr::ite(
                (*c).clone(),
                SsaExpr::extract((*t).clone(), lo, width),
                SsaExpr::extract((*e).clone(), lo, width),
            ),
            a => SsaExpr::Extract(Rc::new(a), lo, width),
        }
    }

    pub fn concat(parts: Vec<SsaExpr>) -> SsaExpr {
        let mut out: Vec<SsaExpr> = Vec::new();
        let flat = parts.into_iter().flat_map(|p| match p {
            SsaExpr::Concat(inner) => inner,
            p => vec![p],
        });
        for p in flat {
            if p.width() == 0 {
                continue;
            }
            if let Some(last) = out.last_mut() {
                if let Some(m) = merge_adjacent(last, &p) {
                    *last = m;
                    continue;
                }
            }
            out.push(p);
        }
        match out.len() {
            0 => SsaExpr::Const(BitVec::zero(0)),
            1 => out.pop().unwrap(),
            _ => SsaExpr::Concat(out),
        }
    }

    pub fn zext(a: SsaExpr, width: u32) -> SsaExpr {
        let aw = a.width();
        if width == aw {
            return a;
        }
        if width < aw {
            return SsaExpr::extract(a, 0, width);
        }
        match a {
            SsaExpr::Const(b) => SsaExpr::Const(BitVec::concat(&[b, BitVec::zero(width - aw)])),
            a => SsaExpr::ZExt(Rc::new(a), width),
        }
    }

    pub fn sext(a: SsaExpr, width: u32) -> SsaExpr {
        let aw = a.width();
        if width == aw {
            return a;
        }
        if width < aw {
            return SsaExpr::extract(a, 0, width);
        }
        match a {
            SsaExpr::Const(b) if width <= 64 => SsaExpr::konst(width, crate::bits::sign_extend(b.to_u64(), aw) as u64),
            a => SsaExpr::SExt(Rc::new(a), width),
        }
    }

    /// Replace `width(v)` bits at `lo`.
    pub fn overwrite(base: SsaExpr, lo: u32, v: SsaExpr) -> SsaExpr {
        let bw = base.width();
        let vw = v.width();
        let hi = lo + vw;
        debug_assert!(hi <= bw);
        SsaExpr::concat(vec![
            SsaExpr::extract(base.clone(), 0, lo),
            v,
            SsaExpr::extract(base, hi, bw - hi),
        ])
    }

    /// Variables referenced, each once, in first-seen order.
    pub fn vars(&self, out: &mut Vec<SsaVar>) {
        let mut seen = std::collections::HashSet::new();
        self.walk(&mut |e| {
            if let SsaExpr::Var(v, _) = e {
                if seen.insert(*v) {
                    out.push(*v);
                }
            }
        });
    }

    pub fn walk(&self, f: &mut dyn FnMut(&SsaExpr)) {
        f(self);
        match self {
            SsaExpr::Const(_) | SsaExpr::Var(..) => {}
            SsaExpr::Not(a) | SsaExpr::Extract(a, ..) | SsaExpr::ZExt(a, _) | SsaExpr::SExt(a, _) => a.walk(f),
            SsaExpr::Bin(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            SsaExpr::Ite(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
            SsaExpr::Concat(ps) => ps.iter().for_each(|p| p.walk(f)),
        }
    }
}

fn merge_adjacent(a: &SsaExpr, b: &SsaExpr) -> Option<SsaExpr> {
    match (a, b) {
        (SsaExpr::Const(x), SsaExpr::Const(y)) => Some(SsaExpr::Const(BitVec::concat(&[x.clone(), y.clone()]))),
        (SsaExpr::Extract(x, lo1, w1), SsaExpr::Extract(y, lo2, w2)) if x == y && lo1 + w1 == *lo2 => {
            Some(SsaExpr::extract((**x).clone(), *lo1, w1 + w2))
        }
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssertKind {
    /// The negated policy condition of a driver.
    Property,
    Unwinding,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SsaStmt {
    Assign {
        var: SsaVar,
        expr: SsaExpr,
    },
    Nondet {
        var: SsaVar,
        key: NondetKey,
    },
    /// Free variable for an entry parameter.
    Input {
        var: SsaVar,
        name: String,
    },
    Assume {
        guard: SsaExpr,
        cond: SsaExpr,
        span: Span,
    },
    Assert {
        guard: SsaExpr,
        cond: SsaExpr,
        kind: AssertKind,
        span: Span,
    },
}

/// A loop-free program in single-assignment form.
#[derive(Clone, Debug, Default)]
pub struct SsaProgram {
    pub vars: Vec<VarInfo>,
    pub stmts: Vec<SsaStmt>,
    /// Entry return value (`__return`) and final contents of reference
    /// parameters, by name.
    pub outputs: Vec<(String, SsaExpr)>,
    /// Final values of the entry function's locals, by name.
    pub locals: Vec<(String, SsaExpr)>,
}

impl SsaProgram {
    pub fn output(&self, name: &str) -> Option<&SsaExpr> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn local(&self, name: &str) -> Option<&SsaExpr> {
        self.locals.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn nondet_vars(&self) -> impl Iterator<Item = (SsaVar, &NondetKey)> {
        self.stmts.iter().filter_map(|s| match s {
            SsaStmt::Nondet { var, key } => Some((*var, key)),
            _ => None,
        })
    }

    pub fn assertions(&self) -> usize {
        self.stmts
            .iter()
            .filter(|s| matches!(s, SsaStmt::Assert { .. }))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: SsaVar, w: u32) -> SsaExpr {
        SsaExpr::Var(i, w)
    }

    #[test]
    fn constant_folding() {
        let e = SsaExpr::bin(WordOp::Add, SsaExpr::konst(8, 250), SsaExpr::konst(8, 10));
        assert_eq!(e.as_u64(), Some(4));
        let p = SsaExpr::bin(WordOp::SLt, SsaExpr::konst(8, 0xff), SsaExpr::konst(8, 0));
        assert!(p.is_true());
        assert_eq!(SsaExpr::bin(WordOp::Add, v(0, 8), SsaExpr::konst(8, 0)), v(0, 8));
    }

    #[test]
    fn extract_through_concat() {
        let c = SsaExpr::concat(vec![v(0, 8), v(1, 8), SsaExpr::konst(16, 0xabcd)]);
        assert_eq!(c.width(), 32);
        assert_eq!(SsaExpr::extract(c.clone(), 8, 8), v(1, 8));
        assert_eq!(SsaExpr::extract(c.clone(), 24, 8).as_u64(), Some(0xab));
        let w = SsaExpr::overwrite(c.clone(), 8, v(2, 8));
        assert_eq!(SsaExpr::extract(w.clone(), 0, 8), v(0, 8));
        assert_eq!(SsaExpr::extract(w, 8, 8), v(2, 8));
        let x = SsaExpr::concat(vec![
            SsaExpr::extract(v(5, 32), 0, 16),
            SsaExpr::extract(v(5, 32), 16, 16),
        ]);
        assert_eq!(x, v(5, 32));
    }

    #[test]
    fn ite_simplifies() {
        let c = v(0, 1);
        assert_eq!(SsaExpr::ite(c.clone(), SsaExpr::tt(), SsaExpr::ff()), c);
        assert_eq!(SsaExpr::ite(SsaExpr::tt(), v(1, 8), v(2, 8)), v(1, 8));
        assert_eq!(SsaExpr::ite(c, v(1, 8), v(1, 8)), v(1, 8));
        assert_eq!(SsaExpr::sext(SsaExpr::konst(8, 0x80), 16).as_u64(), Some(0xff80));
    }
}
