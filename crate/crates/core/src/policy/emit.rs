//! Standalone C drivers for external bounded model checkers.

use std::fmt::Write as _;

use crate::lang::pretty::print_type;
use crate::lang::types::Type;
use crate::lang::{builtin_alias, Analysed, BUILTIN_TYPE_ALIASES};

use super::driver::{c_type, driver_name, driver_text, nondet_stub, Dialect};

pub const STUB_HEADER: &str = "leakbound_stubs.h";

/// Declarations the emitted driver relies on: the builtin type names,
/// library functions, `nondet_*` input stubs and `assume`/`assert`.
pub fn stub_header() -> String {
    let mut s = String::new();
    s.push_str("#ifndef LEAKBOUND_STUBS_H\n#define LEAKBOUND_STUBS_H\n\n");
    for (name, ..) in BUILTIN_TYPE_ALIASES {
        let ty = builtin_alias(name).expect("alias table entry");
        writeln!(s, "typedef {} {};", print_type(&ty), name).unwrap();
    }
    s.push('\n');
    s.push_str("void *memcpy(void *dst, const void *src, size_t n);\n");
    s.push_str("void *memset(void *dst, int c, size_t n);\n");
    s.push_str("int memcmp(const void *a, const void *b, size_t n);\n");
    s.push_str("unsigned long copy_to_user(void *dst, const void *src, unsigned long n);\n\n");
    let mut scalars = vec![Type::Bool];
    for w in [8, 16, 32, 64] {
        scalars.push(Type::int(false, w));
        scalars.push(Type::int(true, w));
    }
    for t in &scalars {
        writeln!(s, "{} {}(void);", c_type(t), nondet_stub(t)).unwrap();
    }
    writeln!(s, "#define input() {}()", nondet_stub(&Type::int(true, 64))).unwrap();
    s.push_str(
        "\n#ifdef __CPROVER__\n\
         #define assume(c) __CPROVER_assume(c)\n\
         #define assert(c) __CPROVER_assert(c, \"policy\")\n\
         #else\n\
         void leakbound_assume(int c);\n\
         void leakbound_assert(int c);\n\
         #define assume(c) leakbound_assume(c)\n\
         #define assert(c) leakbound_assert(c)\n\
         #endif\n\n#endif\n",
    );
    s
}

/// The program followed by a driver for threshold `n`, as C.
pub fn emit_c_driver(a: &Analysed, n: u32) -> String {
    let name = driver_name(&a.program);
    format!(
        "#include \"{}\"\n\n{}\n{}",
        STUB_HEADER,
        a.source.text.trim_end(),
        "\n".to_string() + &driver_text(a, n, &name, Dialect::C)
    )
}
