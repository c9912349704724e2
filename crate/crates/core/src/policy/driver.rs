//! Self-composition drivers.
//!
//! A driver for threshold `n` runs `n + 1` copies of the entry function on
//! fresh secrets and one shared public input, assumes the first `n`
//! observations pairwise distinct and asserts that the last one equals one
//! of them. A failing assertion therefore exhibits `n + 1` distinctions.

use std::fmt::Write as _;

use crate::lang::harness::{EqKind, HarnessSpec};
use crate::lang::tast::{walk_stmts, LocalKind, NodeId, TExprKind, TStmtKind, TypedProgram};
use crate::lang::types::Type;
use crate::lang::{parser, typecheck, Analysed};

use super::PolicyError;

#[derive(Clone, Debug)]
pub struct DriverProgram {
    pub n: u32,
    /// Name of the driver function.
    pub name: String,
    /// Source of the driver function alone.
    pub text: String,
    /// The analysed program with the driver appended as its entry.
    pub program: TypedProgram,
    /// Ids of the `n + 1` calls of the entry function, in order.
    pub calls: Vec<NodeId>,
}

/// How the driver spells a nondeterministic value of a type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dialect {
    /// `input()`, as the checker reads it.
    MiniC,
    /// `nondet_<type>()` stubs, `assume`/`assert` macros.
    C,
}

pub fn c_type(ty: &Type) -> String {
    match ty {
        Type::Void => "void".into(),
        Type::Bool => "_Bool".into(),
        Type::Int(i) => {
            let base = match i.width {
                8 => "char",
                16 => "short",
                32 => "int",
                _ => "long long",
            };
            if i.signed && i.width == 8 {
                "signed char".into()
            } else if i.signed {
                base.into()
            } else {
                format!("unsigned {}", base)
            }
        }
        Type::Array(e, _) => c_type(e),
        Type::Record(r) => format!("struct {}", r.name),
    }
}

/// Name of the C stub returning a nondeterministic `ty`.
pub fn nondet_stub(ty: &Type) -> String {
    let t = c_type(ty)
        .replace("unsigned ", "u")
        .replace("signed char", "schar")
        .replace("long long", "longlong");
    format!("nondet_{}", t.trim_start_matches('_').to_lowercase())
}

fn declare(ty: &Type, name: &str) -> String {
    match ty {
        Type::Array(_, n) => format!("{} {}[{}]", c_type(ty), name, n),
        _ => format!("{} {}", c_type(ty), name),
    }
}

fn zero_init(ty: &Type) -> &'static str {
    if ty.is_scalar() {
        "0"
    } else {
        "{0}"
    }
}

fn obs_var(copy: u32, name: &str) -> String {
    if name == crate::lang::harness::RETURN_IDENT {
        format!("o{}_ret", copy)
    } else {
        format!("o{}_{}", copy, name)
    }
}

fn equal(h: &HarnessSpec, i: u32, j: u32) -> String {
    let parts: Vec<String> = h
        .observables
        .iter()
        .map(|o| {
            let (a, b) = (obs_var(i, o.name()), obs_var(j, o.name()));
            match o.eq {
                EqKind::Scalar => format!("{} == {}", a, b),
                EqKind::Bytes(n) => format!("memcmp(&{}, &{}, {}) == 0", a, b, n),
            }
        })
        .collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        format!("({})", parts.join(" && "))
    }
}

/// Source text of the driver function for threshold `n`.
pub fn driver_text(a: &Analysed, n: u32, name: &str, dialect: Dialect) -> String {
    let h = &a.harness;
    let f = a.program.entry_fn();
    let fresh = |ty: &Type| match dialect {
        Dialect::MiniC => "input()".to_string(),
        Dialect::C => format!("{}()", nondet_stub(ty)),
    };
    let mut s = String::new();
    writeln!(s, "int {}(void)\n{{", name).unwrap();
    for copy in 1..=n + 1 {
        if f.ret != Type::Void
            && h.observables
                .iter()
                .any(|o| o.name() == crate::lang::harness::RETURN_IDENT)
        {
            writeln!(s, "    {};", declare(&f.ret, &obs_var(copy, "__return"))).unwrap();
        }
        for &p in &f.params {
            let local = &f.locals[p];
            if local.kind == LocalKind::RefParam {
                let v = obs_var(copy, &local.name);
                writeln!(s, "    {} = {};", declare(&local.ty, &v), zero_init(&local.ty)).unwrap();
            }
        }
    }
    for p in &h.low {
        writeln!(
            s,
            "    {} = {};",
            declare(&p.ty, &format!("l_{}", p.name)),
            fresh(&p.ty)
        )
        .unwrap();
    }
    for copy in 1..=n + 1 {
        if copy == n + 1 && n >= 2 {
            for i in 1..=n {
                for j in i + 1..=n {
                    writeln!(s, "    assume(!({}));", equal(h, i, j)).unwrap();
                }
            }
        }
        for p in &h.high {
            writeln!(
                s,
                "    {} = {};",
                declare(&p.ty, &format!("h{}_{}", copy, p.name)),
                fresh(&p.ty)
            )
            .unwrap();
        }
        let args: Vec<String> = f
            .params
            .iter()
            .map(|&p| {
                let local = &f.locals[p];
                if local.kind == LocalKind::RefParam {
                    format!("&{}", obs_var(copy, &local.name))
                } else if h.high.iter().any(|x| x.name == local.name) {
                    format!("h{}_{}", copy, local.name)
                } else {
                    format!("l_{}", local.name)
                }
            })
            .collect();
        let call = format!("{}({})", f.name, args.join(", "));
        if f.ret != Type::Void
            && h.observables
                .iter()
                .any(|o| o.name() == crate::lang::harness::RETURN_IDENT)
        {
            writeln!(s, "    {} = {};", obs_var(copy, "__return"), call).unwrap();
        } else {
            writeln!(s, "    {};", call).unwrap();
        }
    }
    let alts: Vec<String> = (1..=n).map(|i| equal(h, n + 1, i)).collect();
    writeln!(s, "    assert({});", alts.join(" || ")).unwrap();
    s.push_str("    return 0;\n}\n");
    s
}

/// A function name not used by the program.
pub fn driver_name(prog: &TypedProgram) -> String {
    let mut name = "main".to_string();
    while prog.function(&name).is_some() {
        name = format!("_{}", name);
    }
    name
}

pub fn synthesize_driver(a: &Analysed, n: u32, max_copies: u32) -> Result<DriverProgram, PolicyError> {
    if n == 0 {
        return Err(PolicyError::ZeroThreshold);
    }
    if n >= max_copies {
        return Err(PolicyError::TooLarge {
            copies: n as u64 + 1,
            limit: max_copies,
        });
    }
    let name = driver_name(&a.program);
    let text = driver_text(a, n, &name, Dialect::MiniC);
    let full = format!("{}\n{}", a.source.text, text);
    let (ast, _) = parser::parse_text(&full).map_err(|e| PolicyError::Driver(e.to_string()))?;
    let mut program = typecheck::typecheck(&ast, a.program.arch).map_err(|e| PolicyError::Driver(e.to_string()))?;
    program.entry = program.function_index(&name).expect("driver function present");
    let mut calls = Vec::new();
    walk_stmts(&program.functions[program.entry].body, &mut |s| {
        let e = match &s.kind {
            TStmtKind::Assign { value, .. } => value,
            TStmtKind::Expr(e) => e,
            _ => return,
        };
        if let TExprKind::Call { id, .. } = &e.kind {
            calls.push(*id);
        }
    });
    debug_assert_eq!(calls.len() as u32, n + 1);
    Ok(DriverProgram {
        n,
        name,
        text,
        program,
        calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_text;
    use crate::lang::types::Arch;

    const ONE_ARG: &str = "#pragma leak high h\n#pragma leak observe __return\nint f(int h) { return h & 1; }\n";

    #[test]
    fn two_distinctions_shape() {
        let a = load_text(ONE_ARG, Arch::X32).unwrap();
        let d = synthesize_driver(&a, 2, 1024).unwrap();
        assert_eq!(
            d.text,
            "int main(void)\n{\n    int o1_ret;\n    int o2_ret;\n    int o3_ret;\n    int h1_h = input();\n    o1_ret = f(h1_h);\n    int h2_h = input();\n    o2_ret = f(h2_h);\n    assume(!(o1_ret == o2_ret));\n    int h3_h = input();\n    o3_ret = f(h3_h);\n    assert(o3_ret == o1_ret || o3_ret == o2_ret);\n    return 0;\n}\n"
        );
        assert_eq!(d.calls.len(), 3);
    }

    #[test]
    fn single_threshold_has_no_assumption() {
        let a = load_text(ONE_ARG, Arch::X32).unwrap();
        let d = synthesize_driver(&a, 1, 1024).unwrap();
        assert!(!d.text.contains("assume"));
        assert!(d.text.contains("assert(o2_ret == o1_ret);"));
    }

    #[test]
    fn shared_low_and_all_pairs() {
        let src = "#pragma leak high h\n#pragma leak low l\n#pragma leak observe __return\nint f(int h, int l) { return h + l; }\n";
        let a = load_text(src, Arch::X32).unwrap();
        let d = synthesize_driver(&a, 5, 1024).unwrap();
        assert_eq!(d.text.matches("l_l = input()").count(), 1);
        assert_eq!(d.text.matches(", l_l)").count(), 6);
        assert_eq!(d.text.matches("!(").count(), 10);
    }

    #[test]
    fn size_limit() {
        let a = load_text(ONE_ARG, Arch::X32).unwrap();
        assert!(matches!(synthesize_driver(&a, 8, 8), Err(PolicyError::TooLarge { .. })));
        assert!(matches!(synthesize_driver(&a, 0, 8), Err(PolicyError::ZeroThreshold)));
    }

    #[test]
    fn stub_names() {
        assert_eq!(nondet_stub(&Type::int(false, 8)), "nondet_uchar");
        assert_eq!(nondet_stub(&Type::int(true, 8)), "nondet_schar");
        assert_eq!(nondet_stub(&Type::int(true, 64)), "nondet_longlong");
        assert_eq!(nondet_stub(&Type::Bool), "nondet_bool");
    }
}
