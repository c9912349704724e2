//! Exhaustive enumeration of equivalence classes.
//!
//! Nondeterministic choices count as part of the secret: for every high
//! input the enumerator walks the whole tree of choices the run demands,
//! and each leaf is one point of the secret domain.

use std::collections::HashMap;

use crate::bits::mask;
use crate::lang::harness::{HarnessParam, HarnessSpec};
use crate::lang::tast::TypedProgram;
use crate::metrics::Partition;
use crate::nondet::{NondetKey, NondetSource};

use super::interp::{run_concrete, ExecError};
use super::value::{ConcreteValue, Observation};

pub const DEFAULT_BUDGET: u64 = 1 << 20;

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    /// Maximum number of runs.
    pub budget: u64,
    pub max_steps: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            budget: DEFAULT_BUDGET,
            max_steps: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration needs more than {0} runs")]
    Budget(u64),
    #[error("run failed on high={high:?}: {source}")]
    Exec {
        high: Vec<ConcreteValue>,
        source: ExecError,
    },
}

/// One secret: high inputs plus the nondeterministic choices demanded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub high: Vec<ConcreteValue>,
    pub nondet: Vec<(NondetKey, u64)>,
}

#[derive(Clone, Debug)]
pub struct EquivalenceRelation {
    pub domain: Vec<Point>,
    pub partition: Partition,
    /// Observation of each class, by class index.
    pub observations: Vec<Observation>,
    pub fixed_low: Vec<ConcreteValue>,
}

impl EquivalenceRelation {
    pub fn class_count(&self) -> usize {
        self.partition.class_count()
    }

    /// High parts of the members of each class (without nondet choices).
    pub fn high_classes(&self) -> Vec<Vec<Vec<ConcreteValue>>> {
        self.partition
            .classes()
            .iter()
            .map(|c| c.iter().map(|&i| self.domain[i].high.clone()).collect())
            .collect()
    }
}

/// Replays a fixed prefix of choices, then answers zero, logging demands.
struct DfsSource {
    forced: Vec<(NondetKey, u64)>,
    log: Vec<(NondetKey, u64)>,
}

impl NondetSource for DfsSource {
    fn choose(&mut self, key: &NondetKey) -> u64 {
        let i = self.log.len();
        let v = match self.forced.get(i) {
            Some((k, v)) => {
                debug_assert_eq!(k, key, "choice order changed under a fixed prefix");
                *v
            }
            None => 0,
        };
        self.log.push((key.clone(), v));
        v
    }
}

/// Every run for one high input, one per leaf of the choice tree.
fn runs_for(
    prog: &TypedProgram,
    harness: &HarnessSpec,
    high: &[ConcreteValue],
    low: &[ConcreteValue],
    cfg: &OracleConfig,
    used: &mut u64,
    mut visit: impl FnMut(Vec<(NondetKey, u64)>, Observation),
) -> Result<(), OracleError> {
    let mut forced = Vec::new();
    loop {
        *used += 1;
        if *used > cfg.budget {
            return Err(OracleError::Budget(cfg.budget));
        }
        let mut src = DfsSource {
            forced: std::mem::take(&mut forced),
            log: Vec::new(),
        };
        let obs =
            run_concrete(prog, harness, high, low, &mut src, cfg.max_steps).map_err(|source| OracleError::Exec {
                high: high.to_vec(),
                source,
            })?;
        let mut next = src.log.clone();
        visit(src.log, obs);
        loop {
            match next.pop() {
                None => return Ok(()),
                Some((k, v)) if v < mask(k.width) => {
                    next.push((k, v + 1));
                    break;
                }
                Some(_) => {}
            }
        }
        forced = next;
    }
}

pub fn enumerate_relation(
    prog: &TypedProgram,
    harness: &HarnessSpec,
    low: &[ConcreteValue],
    high_domain: impl IntoIterator<Item = Vec<ConcreteValue>>,
    cfg: &OracleConfig,
) -> Result<EquivalenceRelation, OracleError> {
    let mut used = 0;
    enumerate_with(prog, harness, low, high_domain, cfg, &mut used)
}

fn enumerate_with(
    prog: &TypedProgram,
    harness: &HarnessSpec,
    low: &[ConcreteValue],
    high_domain: impl IntoIterator<Item = Vec<ConcreteValue>>,
    cfg: &OracleConfig,
    used: &mut u64,
) -> Result<EquivalenceRelation, OracleError> {
    let mut domain = Vec::new();
    let mut obs_of = Vec::new();
    for h in high_domain {
        runs_for(prog, harness, &h, low, cfg, used, |nondet, obs| {
            domain.push(Point {
                high: h.clone(),
                nondet,
            });
            obs_of.push(obs);
        })?;
    }
    let partition = Partition::from_labels(obs_of.iter());
    let observations = partition.classes().iter().map(|c| obs_of[c[0]].clone()).collect();
    Ok(EquivalenceRelation {
        domain,
        partition,
        observations,
        fixed_low: low.to_vec(),
    })
}

/// Largest class count over all low inputs; ties go to the first low in
/// enumeration order.
pub fn oracle_capacity(
    prog: &TypedProgram,
    harness: &HarnessSpec,
    low_domain: impl IntoIterator<Item = Vec<ConcreteValue>>,
    high_domain: &[Vec<ConcreteValue>],
    cfg: &OracleConfig,
) -> Result<(Vec<ConcreteValue>, usize), OracleError> {
    let mut used = 0;
    let mut best: Option<(Vec<ConcreteValue>, usize)> = None;
    for l in low_domain {
        let rel = enumerate_with(prog, harness, &l, high_domain.iter().cloned(), cfg, &mut used)?;
        let n = rel.class_count();
        if best.as_ref().is_none_or(|(_, b)| n > *b) {
            best = Some((l, n));
        }
    }
    Ok(best.expect("low domain is never empty"))
}

/// Number of points in the full domain of the parameters, if it fits.
pub fn domain_size(params: &[HarnessParam]) -> Option<u64> {
    params.iter().try_fold(1u64, |acc, p| {
        let w = p.ty.value_bits();
        if w >= 63 {
            None
        } else {
            acc.checked_mul(1 << w)
        }
    })
}

/// All value tuples of the parameters, first parameter varying slowest.
pub fn full_domain(params: &[HarnessParam]) -> Option<Vec<Vec<ConcreteValue>>> {
    let size = domain_size(params)?;
    if size > DEFAULT_BUDGET * 16 {
        return None;
    }
    let mut out = vec![Vec::new()];
    for p in params {
        let n = 1u64 << p.ty.value_bits();
        let mut next = Vec::with_capacity(out.len() * n as usize);
        for prefix in &out {
            for v in 0..n {
                let mut t = prefix.clone();
                t.push(ConcreteValue::scalar(p.ty.clone(), v));
                next.push(t);
            }
        }
        out = next;
    }
    Some(out)
}

/// Tally of class sizes keyed by observation, for reports.
pub fn class_sizes(rel: &EquivalenceRelation) -> HashMap<Observation, usize> {
    rel.partition
        .classes()
        .iter()
        .zip(&rel.observations)
        .map(|(c, o)| (o.clone(), c.len()))
        .collect()
}
