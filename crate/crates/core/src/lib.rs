//! Bounded checking of quantitative information-flow policies for a small,
//! bit-precise subset of C.

pub mod bits;
pub mod env;
pub mod lang;
pub mod metrics;
pub mod nondet;
pub mod oracle;
pub mod policy;
pub mod sat;
pub mod ssa;
