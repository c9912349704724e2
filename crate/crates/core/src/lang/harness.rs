//! Leakage harness: which entry parameters are secret, which are
//! attacker-controlled, and what the attacker observes.

use super::ast::{Pragma, PragmaRole};
use super::tast::{walk_stmts, LocalKind, TStmtKind, TypedProgram};
use super::types::Type;

/// Pseudo-identifier for the return value in `observe` pragmas.
pub const RETURN_IDENT: &str = "__return";
/// Pseudo-identifier declaring that nondeterministic choices are the secret.
pub const NONDET_IDENT: &str = "__nondet";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarnessParam {
    pub name: String,
    /// Position in the entry function's parameter list.
    pub index: usize,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservableKind {
    Return,
    OutParam { name: String, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqKind {
    Scalar,
    /// Byte comparison over this many bytes.
    Bytes(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observable {
    pub kind: ObservableKind,
    pub ty: Type,
    pub eq: EqKind,
}

impl Observable {
    pub fn name(&self) -> &str {
        match &self.kind {
            ObservableKind::Return => RETURN_IDENT,
            ObservableKind::OutParam { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarnessSpec {
    pub entry: String,
    pub high: Vec<HarnessParam>,
    pub low: Vec<HarnessParam>,
    pub observables: Vec<Observable>,
    /// Declared with `high __nondet`.
    pub nondet_high: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("line {line}: `{ident}` is not a parameter of `{entry}`")]
    UnknownIdent { ident: String, entry: String, line: u32 },
    #[error("line {line}: `{ident}` is given more than one role")]
    RoleConflict { ident: String, line: u32 },
    #[error("line {line}: `{ident}` must be a value parameter to be an input")]
    PointerInput { ident: String, line: u32 },
    #[error("line {line}: only pointer parameters and `__return` can be observed, not `{ident}`")]
    NotObservable { ident: String, line: u32 },
    #[error("`{0}` returns void; `observe __return` is meaningless")]
    VoidReturn(String),
    #[error("no `#pragma leak observe` line")]
    NoObservable,
    #[error("no `#pragma leak high` line")]
    NoHigh,
    #[error("value parameter `{0}` has no role; declare it high or low")]
    Unassigned(String),
    #[error("`assume`/`assert` may only appear in generated drivers (found in `{0}`)")]
    UserAssertion(String),
}

pub fn resolve_harness(prog: &TypedProgram, pragmas: &[Pragma]) -> Result<HarnessSpec, HarnessError> {
    for f in &prog.functions {
        let mut found = false;
        walk_stmts(&f.body, &mut |s| {
            found |= matches!(s.kind, TStmtKind::Assume(_) | TStmtKind::Assert(_));
        });
        if found {
            return Err(HarnessError::UserAssertion(f.name.clone()));
        }
    }
    let f = prog.entry_fn();
    let mut spec = HarnessSpec {
        entry: f.name.clone(),
        high: vec![],
        low: vec![],
        observables: vec![],
        nondet_high: false,
    };
    let mut seen: Vec<&str> = Vec::new();
    for p in pragmas {
        let ident = p.ident.as_str();
        if seen.contains(&ident) {
            return Err(HarnessError::RoleConflict {
                ident: p.ident.clone(),
                line: p.line,
            });
        }
        seen.push(ident);
        if ident == NONDET_IDENT && p.role == PragmaRole::High {
            spec.nondet_high = true;
            continue;
        }
        if ident == RETURN_IDENT && p.role == PragmaRole::Observe {
            if f.ret == Type::Void {
                return Err(HarnessError::VoidReturn(f.name.clone()));
            }
            let eq = match f.ret {
                ref t if t.is_scalar() => EqKind::Scalar,
                ref t => EqKind::Bytes(t.size_bytes()),
            };
            spec.observables.push(Observable {
                kind: ObservableKind::Return,
                ty: f.ret.clone(),
                eq,
            });
            continue;
        }
        let Some((index, local)) = f.param(ident) else {
            return Err(HarnessError::UnknownIdent {
                ident: p.ident.clone(),
                entry: f.name.clone(),
                line: p.line,
            });
        };
        let param = HarnessParam {
            name: p.ident.clone(),
            index,
            ty: local.ty.clone(),
        };
        match p.role {
            PragmaRole::High | PragmaRole::Low => {
                if local.kind == LocalKind::RefParam {
                    return Err(HarnessError::PointerInput {
                        ident: p.ident.clone(),
                        line: p.line,
                    });
                }
                if p.role == PragmaRole::High {
                    spec.high.push(param);
                } else {
                    spec.low.push(param);
                }
            }
            PragmaRole::Observe => {
                if local.kind != LocalKind::RefParam {
                    return Err(HarnessError::NotObservable {
                        ident: p.ident.clone(),
                        line: p.line,
                    });
                }
                let eq = if local.ty.is_scalar() {
                    EqKind::Scalar
                } else {
                    EqKind::Bytes(local.ty.object_bytes(prog.arch))
                };
                spec.observables.push(Observable {
                    kind: ObservableKind::OutParam {
                        name: p.ident.clone(),
                        index,
                    },
                    ty: local.ty.clone(),
                    eq,
                });
            }
        }
    }
    for (_, l) in f.params.iter().map(|v| (*v, &f.locals[*v])) {
        if l.kind == LocalKind::Param && !seen.contains(&l.name.as_str()) {
            return Err(HarnessError::Unassigned(l.name.clone()));
        }
    }
    if spec.high.is_empty() && !spec.nondet_high {
        return Err(HarnessError::NoHigh);
    }
    if spec.observables.is_empty() {
        return Err(HarnessError::NoObservable);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_text;
    use crate::lang::types::Arch;
    use crate::lang::FrontendError;

    const UNDERFLOW: &str = "#pragma leak high h
#pragma leak low ppos
#pragma leak observe __return
typedef long long loff_t;
int underflow(int h, loff_t ppos) {
  int bufsz;
  size_t nbytes;
  bufsz = 1024;
  nbytes = 20;
  if (ppos + nbytes > bufsz)
    nbytes = bufsz - ppos;
  if (ppos + nbytes > bufsz) {
    return h;
  } else {
    return 0;
  }
}
";

    #[test]
    fn program_two_roles() {
        let a = load_text(UNDERFLOW, Arch::X32).unwrap();
        let h = &a.harness;
        assert_eq!(h.high.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["h"]);
        assert_eq!(h.low.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["ppos"]);
        assert_eq!(h.observables.len(), 1);
        assert_eq!(h.observables[0].kind, ObservableKind::Return);
        assert_eq!(h.observables[0].eq, EqKind::Scalar);
    }

    #[test]
    fn pure_high_program() {
        let a = load_text(
            "#pragma leak high h\n#pragma leak observe __return\nint f(int h) { return h & 1; }",
            Arch::X32,
        )
        .unwrap();
        assert!(a.harness.low.is_empty());
    }

    #[test]
    fn record_out_param_compares_padded_bytes() {
        let src = "#pragma leak high h
#pragma leak observe out
struct r { unsigned char a; unsigned int b; unsigned char c; };
void f(int h, struct r *out) { out->a = h; }";
        let a32 = load_text(src, Arch::X32).unwrap();
        assert_eq!(a32.harness.observables[0].eq, EqKind::Bytes(8));
        let a64 = load_text(src, Arch::X64).unwrap();
        assert_eq!(a64.harness.observables[0].eq, EqKind::Bytes(8));
        let src2 = src.replace("unsigned char c;", "unsigned char c; unsigned int d;");
        assert_eq!(
            load_text(&src2, Arch::X64).unwrap().harness.observables[0].eq,
            EqKind::Bytes(16)
        );
    }

    #[test]
    fn errors() {
        let conflict =
            "#pragma leak high h\n#pragma leak low h\n#pragma leak observe __return\nint f(int h) { return h; }";
        assert!(matches!(
            load_text(conflict, Arch::X32),
            Err(FrontendError::Harness(HarnessError::RoleConflict { .. }))
        ));
        let none = "#pragma leak high h\nint f(int h) { return h; }";
        assert!(matches!(
            load_text(none, Arch::X32),
            Err(FrontendError::Harness(HarnessError::NoObservable))
        ));
        let unknown = "#pragma leak high x\n#pragma leak observe __return\nint f(int h) { return h; }";
        assert!(matches!(
            load_text(unknown, Arch::X32),
            Err(FrontendError::Harness(HarnessError::UnknownIdent { .. }))
        ));
    }
}
