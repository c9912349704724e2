//! Policy checking by self-composition.

pub mod capacity;
pub mod check;
pub mod counterexample;
pub mod driver;
pub mod emit;

pub use capacity::{measure_capacity, CapacityReport, DEFAULT_N_MAX};
pub use check::{check_policy, driver_ssa, CheckConfig, CheckStats, PolicyCheckResult, Verdict};
pub use counterexample::{decode_counterexample, Counterexample, TraceStep};
pub use driver::{synthesize_driver, DriverProgram};
pub use emit::{emit_c_driver, stub_header, STUB_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("the policy threshold must be at least 1")]
    ZeroThreshold,
    #[error("a driver with {copies} copies exceeds the limit of {limit}")]
    TooLarge { copies: u64, limit: u32 },
    #[error("generated driver is invalid: {0}")]
    Driver(String),
    #[error(transparent)]
    Ssa(#[from] crate::ssa::SsaError),
    #[error("internal soundness error: {0}")]
    Soundness(String),
    #[error("probe results are not monotone: {0}")]
    NonMonotone(String),
}
