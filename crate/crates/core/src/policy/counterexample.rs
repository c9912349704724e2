//! Turning a satisfying assignment of a driver into concrete runs.

use std::collections::HashMap;

use crate::bits::BitVec;
use crate::lang::harness::HarnessParam;
use crate::lang::Analysed;
use crate::nondet::{Frame, MapSource, NondetKey, Recording};
use crate::oracle::{run_concrete, ConcreteValue, Observation};
use crate::sat::Encoding;
use crate::ssa::{evaluate, AssertKind, SsaProgram, SsaStmt};

use super::driver::DriverProgram;
use super::PolicyError;

const REPLAY_STEPS: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub line: u32,
    pub function: String,
    pub copy: u32,
    pub var: String,
    pub value: BitVec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counterexample {
    pub low: Vec<ConcreteValue>,
    /// High inputs of each of the `n + 1` copies.
    pub high: Vec<Vec<ConcreteValue>>,
    /// Nondeterministic choices each copy made when replayed.
    pub nondet: Vec<Vec<(NondetKey, u64)>>,
    pub observations: Vec<Observation>,
    /// Assignments that changed a variable, in program order.
    pub trace: Vec<TraceStep>,
}

/// Decode `model`, re-evaluate it through the SSA program, replay every copy
/// through the interpreter and check that the observations are `n + 1`
/// distinct values.
pub fn decode_counterexample(
    a: &Analysed,
    d: &DriverProgram,
    ssa: &SsaProgram,
    enc: &Encoding,
    model: &[bool],
) -> Result<Counterexample, PolicyError> {
    let choices = enc.nondet_values(ssa, model);
    let val = evaluate(ssa, &HashMap::new(), &mut MapSource::new(choices.clone()));
    let property_failed = val.failed.iter().any(|&i| {
        matches!(
            ssa.stmts[i],
            SsaStmt::Assert {
                kind: AssertKind::Property,
                ..
            }
        )
    });
    if !val.assumptions_hold || !property_failed {
        return Err(PolicyError::Soundness(
            "model does not violate the driver when evaluated".into(),
        ));
    }
    let local = |name: &str| -> Result<BitVec, PolicyError> {
        ssa.local(name)
            .map(|e| val.eval(e))
            .ok_or_else(|| PolicyError::Soundness(format!("driver has no local `{}`", name)))
    };
    let typed = |params: &[HarnessParam], prefix: &str| -> Result<Vec<ConcreteValue>, PolicyError> {
        params
            .iter()
            .map(|p| {
                Ok(ConcreteValue {
                    ty: p.ty.clone(),
                    bits: local(&format!("{}_{}", prefix, p.name))?,
                })
            })
            .collect()
    };
    let h = &a.harness;
    let low = typed(&h.low, "l")?;
    let mut cex = Counterexample {
        low,
        high: Vec::new(),
        nondet: Vec::new(),
        observations: Vec::new(),
        trace: Vec::new(),
    };
    for (i, &call) in d.calls.iter().enumerate() {
        let copy = i as u32 + 1;
        let high = typed(&h.high, &format!("h{}", copy))?;
        let mut decoded = Vec::new();
        for o in &h.observables {
            let name = if o.name() == crate::lang::harness::RETURN_IDENT {
                format!("o{}_ret", copy)
            } else {
                format!("o{}_{}", copy, o.name())
            };
            decoded.push(local(&name)?);
        }
        let mine: HashMap<NondetKey, u64> = choices
            .iter()
            .filter(|(k, _)| k.frames.first() == Some(&Frame::Call(call)))
            .filter_map(|(k, v)| k.strip_first().map(|k| (k, *v)))
            .collect();
        let mut src = MapSource::new(mine);
        let mut rec = Recording {
            inner: &mut src,
            log: Vec::new(),
        };
        let obs = run_concrete(&a.program, h, &high, &cex.low, &mut rec, REPLAY_STEPS)
            .map_err(|e| PolicyError::Soundness(format!("replay of copy {} failed: {}", copy, e)))?;
        let log = rec.log;
        for (o, want) in obs.iter().zip(&decoded) {
            if &o.bits != want {
                return Err(PolicyError::Soundness(format!(
                    "copy {}: replay observed {} but the model gives {}",
                    copy,
                    o.bits.to_bin_string(),
                    want.to_bin_string()
                )));
            }
        }
        cex.high.push(high);
        cex.nondet.push(log);
        cex.observations.push(obs);
    }
    let n = cex.observations.len();
    for i in 0..n {
        for j in i + 1..n {
            if cex.observations[i] == cex.observations[j] {
                return Err(PolicyError::Soundness(format!(
                    "copies {} and {} observe the same value",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let mut last: HashMap<(String, u32, String), BitVec> = HashMap::new();
    for s in &ssa.stmts {
        let v = match s {
            SsaStmt::Assign { var, .. } => *var,
            _ => continue,
        };
        let info = &ssa.vars[v as usize];
        if info.origin.var.is_empty() {
            continue;
        }
        let value = val.value(v).clone();
        let key = (info.origin.function.clone(), info.origin.copy, info.origin.var.clone());
        if last.get(&key) == Some(&value) {
            continue;
        }
        last.insert(key, value.clone());
        cex.trace.push(TraceStep {
            line: info.origin.span.line,
            function: info.origin.function.clone(),
            copy: info.origin.copy,
            var: info.origin.var.clone(),
            value,
        });
    }
    Ok(cex)
}
