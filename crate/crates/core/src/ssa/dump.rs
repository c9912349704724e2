//! Text form of SSA programs (`--dump-ssa`).
//!
//! One statement per line:
//!
//! ```text
//! v3:32 = (add v1:32 #x00000004)        ; modulo::0::o#1
//! v4:8 = nondet s12.0:8                 ; nondet::s12.0:8
//! v5:32 = input h
//! assume v6:1 => (ne v5:32 #x00000000)
//! assert[property] #b1 => v9:1
//! out __return = v3:32
//! ```

use std::fmt::Write;

use crate::bits::BitVec;

use super::ir::*;

pub fn expr_to_string(e: &SsaExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_const(s: &mut String, b: &BitVec) {
    if b.width().is_multiple_of(4) && b.width() > 0 {
        s.push_str("#x");
        for i in (0..b.width() / 4).rev() {
            let nib = (0..4).fold(0u8, |acc, k| acc | ((b.bit(4 * i + k) as u8) << k));
            let _ = write!(s, "{:x}", nib);
        }
    } else {
        s.push_str("#b");
        s.push_str(&b.to_bin_string());
    }
}

fn write_expr(s: &mut String, e: &SsaExpr) {
    match e {
        SsaExpr::Const(b) => write_const(s, b),
        SsaExpr::Var(v, w) => {
            let _ = write!(s, "v{}:{}", v, w);
        }
        SsaExpr::Not(a) => {
            s.push_str("(not ");
            write_expr(s, a);
            s.push(')');
        }
        SsaExpr::Bin(op, a, b) => {
            let _ = write!(s, "({} ", op.mnemonic());
            write_expr(s, a);
            s.push(' ');
            write_expr(s, b);
            s.push(')');
        }
        SsaExpr::Ite(c, t, f) => {
            s.push_str("(ite ");
            write_expr(s, c);
            s.push(' ');
            write_expr(s, t);
            s.push(' ');
            write_expr(s, f);
            s.push(')');
        }
        SsaExpr::Extract(a, lo, w) => {
            let _ = write!(s, "(extract {} {} ", lo, w);
            write_expr(s, a);
            s.push(')');
        }
        SsaExpr::Concat(ps) => {
            s.push_str("(concat");
            for p in ps {
                s.push(' ');
                write_expr(s, p);
            }
            s.push(')');
        }
        SsaExpr::ZExt(a, w) => {
            let _ = write!(s, "(zext {} ", w);
            write_expr(s, a);
            s.push(')');
        }
        SsaExpr::SExt(a, w) => {
            let _ = write!(s, "(sext {} ", w);
            write_expr(s, a);
            s.push(')');
        }
    }
}

pub fn dump(p: &SsaProgram) -> String {
    let mut out = String::new();
    for st in &p.stmts {
        match st {
            SsaStmt::Assign { var, expr } => {
                let info = &p.vars[*var as usize];
                let _ = writeln!(
                    out,
                    "v{}:{} = {}    ; {}",
                    var,
                    info.width,
                    expr_to_string(expr),
                    info.name
                );
            }
            SsaStmt::Nondet { var, key } => {
                let _ = writeln!(out, "v{}:{} = nondet {}", var, key.width, key);
            }
            SsaStmt::Input { var, name } => {
                let _ = writeln!(out, "v{}:{} = input {}", var, p.vars[*var as usize].width, name);
            }
            SsaStmt::Assume { guard, cond, .. } => {
                let _ = writeln!(out, "assume {} => {}", expr_to_string(guard), expr_to_string(cond));
            }
            SsaStmt::Assert { guard, cond, kind, .. } => {
                let k = match kind {
                    AssertKind::Property => "property",
                    AssertKind::Unwinding => "unwinding",
                };
                let _ = writeln!(
                    out,
                    "assert[{}] {} => {}",
                    k,
                    expr_to_string(guard),
                    expr_to_string(cond)
                );
            }
        }
    }
    for (n, e) in &p.outputs {
        let _ = writeln!(out, "out {} = {}", n, expr_to_string(e));
    }
    out
}
