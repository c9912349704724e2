//! Loop unwinding to a fixed depth.
//!
//! `while (c) B` with bound `k` becomes the nest
//! `iter0 { if (c) { B; iter1 { if (c) { B; ... iterk { edge(c) } } } } }`
//! where each `iter` scope names the iteration for nondeterministic choices
//! and the final edge either assumes or asserts that `c` is false.

use crate::lang::tast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnwindConfig {
    pub bound: u32,
    /// Emit unwinding assertions instead of assumptions at the edges.
    pub check: bool,
}

pub fn unwind_program(prog: &TypedProgram, cfg: UnwindConfig) -> TypedProgram {
    let mut out = prog.clone();
    for f in &mut out.functions {
        f.body = unwind_block(&f.body, cfg);
    }
    out
}

pub fn is_loop_free(prog: &TypedProgram) -> bool {
    let mut free = true;
    for f in &prog.functions {
        walk_stmts(&f.body, &mut |s| {
            if matches!(s.kind, TStmtKind::While { .. }) {
                free = false;
            }
        });
    }
    free
}

fn unwind_block(stmts: &[TStmt], cfg: UnwindConfig) -> Vec<TStmt> {
    stmts.iter().map(|s| unwind_stmt(s, cfg)).collect()
}

fn unwind_stmt(s: &TStmt, cfg: UnwindConfig) -> TStmt {
    let kind = match &s.kind {
        TStmtKind::While { cond, body, step } => {
            let mut iter_body = unwind_block(body, cfg);
            iter_body.extend(unwind_block(step, cfg));
            return unroll(s, cond, &iter_body, 0, cfg);
        }
        TStmtKind::If { cond, then, els } => TStmtKind::If {
            cond: cond.clone(),
            then: unwind_block(then, cfg),
            els: unwind_block(els, cfg),
        },
        TStmtKind::Block(b) => TStmtKind::Block(unwind_block(b, cfg)),
        TStmtKind::IterScope {
            loop_id,
            iteration,
            body,
        } => TStmtKind::IterScope {
            loop_id: *loop_id,
            iteration: *iteration,
            body: unwind_block(body, cfg),
        },
        k => k.clone(),
    };
    TStmt { kind, ..s.clone() }
}

fn unroll(w: &TStmt, cond: &TExpr, body: &[TStmt], i: u32, cfg: UnwindConfig) -> TStmt {
    let inner = if i < cfg.bound {
        let mut then = body.to_vec();
        then.push(unroll(w, cond, body, i + 1, cfg));
        TStmt {
            id: w.id,
            span: w.span,
            kind: TStmtKind::If {
                cond: cond.clone(),
                then,
                els: Vec::new(),
            },
        }
    } else {
        TStmt {
            id: w.id,
            span: w.span,
            kind: TStmtKind::UnwindEdge {
                loop_id: w.id,
                cond: cond.clone(),
                check: cfg.check,
            },
        }
    };
    TStmt {
        id: w.id,
        span: w.span,
        kind: TStmtKind::IterScope {
            loop_id: w.id,
            iteration: i,
            body: vec![inner],
        },
    }
}
