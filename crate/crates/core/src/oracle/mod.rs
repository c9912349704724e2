//! Concrete ground truth: interpreter and brute-force class enumeration.

pub mod enumerate;
pub mod interp;
pub mod value;

pub use enumerate::{
    enumerate_relation, full_domain, oracle_capacity, EquivalenceRelation, OracleConfig, OracleError, DEFAULT_BUDGET,
};
pub use interp::{run_concrete, ExecError};
pub use value::{ConcreteValue, Observation};
