//! Loop unwinding and single-assignment form.

pub mod build;
pub mod dump;
pub mod eval;
pub mod ir;
pub mod unwind;

pub use build::{build_ssa, SsaError};
pub use eval::{eval_expr, evaluate, Valuation};
pub use ir::{AssertKind, SsaExpr, SsaProgram, SsaStmt, SsaVar};
pub use unwind::{unwind_program, UnwindConfig};
