//! Direct evaluation of SSA programs.

use std::collections::HashMap;

use crate::bits::{eval_word_op, BitVec};
use crate::nondet::NondetSource;

use super::ir::*;

#[derive(Clone, Debug)]
pub struct Valuation {
    pub values: Vec<Option<BitVec>>,
    /// Every assumption whose guard held was true.
    pub assumptions_hold: bool,
    /// Statement indices of assertions whose guard held and condition failed.
    pub failed: Vec<usize>,
}

impl Valuation {
    pub fn value(&self, v: SsaVar) -> &BitVec {
        self.values[v as usize]
            .as_ref()
            .expect("variable evaluated before definition")
    }

    pub fn eval(&self, e: &SsaExpr) -> BitVec {
        eval_expr(e, &self.values)
    }
}

pub fn eval_expr(e: &SsaExpr, values: &[Option<BitVec>]) -> BitVec {
    match e {
        SsaExpr::Const(b) => b.clone(),
        SsaExpr::Var(v, _) => values[*v as usize]
            .clone()
            .expect("variable evaluated before definition"),
        SsaExpr::Not(a) => {
            let a = eval_expr(a, values);
            let bits: Vec<bool> = (0..a.width()).map(|i| !a.bit(i)).collect();
            BitVec::from_bits(&bits)
        }
        SsaExpr::Bin(op, a, b) => {
            let x = eval_expr(a, values);
            let y = eval_expr(b, values);
            let r = eval_word_op(*op, x.to_u64(), y.to_u64(), x.width(), y.width());
            BitVec::from_u64(if op.is_predicate() { 1 } else { x.width() }, r)
        }
        SsaExpr::Ite(c, t, f) => {
            if eval_expr(c, values).bit(0) {
                eval_expr(t, values)
            } else {
                eval_expr(f, values)
            }
        }
        SsaExpr::Extract(a, lo, w) => eval_expr(a, values).extract(*lo, *w),
        SsaExpr::Concat(ps) => BitVec::concat(&ps.iter().map(|p| eval_expr(p, values)).collect::<Vec<_>>()),
        SsaExpr::ZExt(a, w) => {
            let a = eval_expr(a, values);
            let aw = a.width();
            BitVec::concat(&[a, BitVec::zero(w - aw)])
        }
        SsaExpr::SExt(a, w) => {
            let a = eval_expr(a, values);
            let aw = a.width();
            let sign = aw > 0 && a.bit(aw - 1);
            let mut out = BitVec::concat(&[a, BitVec::zero(w - aw)]);
            for i in aw..*w {
                out.set_bit(i, sign);
            }
            out
        }
    }
}

/// Evaluate every statement in order. Inputs missing from `inputs` are zero.
pub fn evaluate(p: &SsaProgram, inputs: &HashMap<String, BitVec>, nondet: &mut dyn NondetSource) -> Valuation {
    let mut values: Vec<Option<BitVec>> = vec![None; p.vars.len()];
    let mut assumptions_hold = true;
    let mut failed = Vec::new();
    for (i, s) in p.stmts.iter().enumerate() {
        match s {
            SsaStmt::Assign { var, expr } => values[*var as usize] = Some(eval_expr(expr, &values)),
            SsaStmt::Nondet { var, key } => {
                values[*var as usize] = Some(BitVec::from_u64(key.width, nondet.choose(key)));
            }
            SsaStmt::Input { var, name } => {
                let w = p.vars[*var as usize].width;
                let v = inputs
                    .get(name)
                    .map(|b| b.extract(0, w))
                    .unwrap_or_else(|| BitVec::zero(w));
                values[*var as usize] = Some(v);
            }
            SsaStmt::Assume { guard, cond, .. } => {
                if eval_expr(guard, &values).bit(0) && !eval_expr(cond, &values).bit(0) {
                    assumptions_hold = false;
                }
            }
            SsaStmt::Assert { guard, cond, .. } => {
                if eval_expr(guard, &values).bit(0) && !eval_expr(cond, &values).bit(0) {
                    failed.push(i);
                }
            }
        }
    }
    Valuation {
        values,
        assumptions_hold,
        failed,
    }
}
