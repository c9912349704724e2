//! Propositional encoding and satisfiability.

pub mod blast;
pub mod cnf;
pub mod solver;

pub use blast::{encode, Blaster, Encoding, Goal};
pub use cnf::{Cnf, DimacsError, Lit};
pub use solver::{solve, SatResult, SolveStats, SolverConfig};
