//! Searching for the number of distinctions a program makes.

use crate::lang::Analysed;
use crate::metrics::channel_capacity;

use super::check::{check_policy, CheckConfig, Verdict};
use super::PolicyError;

pub const DEFAULT_N_MAX: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityReport {
    /// `log2` of [`CapacityReport::class_count`].
    pub lower_bound_bits: f64,
    /// Largest number of distinctions shown feasible.
    pub class_count: u32,
    /// The next policy up was refuted with unwinding assertions.
    pub exact: bool,
    /// Every policy checked, in the order checked.
    pub probes: Vec<(u32, Verdict)>,
}

/// Violated probes must all lie below the probes that were not violated.
pub fn check_monotone(probes: &[(u32, Verdict)]) -> Result<(), PolicyError> {
    for (n, v) in probes {
        for (m, w) in probes {
            let w_holds = !w.is_violated() && *w != Verdict::Unknown;
            if v.is_violated() && w_holds && n >= m {
                return Err(PolicyError::NonMonotone(format!(
                    "policy {} is violated but policy {} is {}",
                    n,
                    m,
                    w.name()
                )));
            }
        }
    }
    Ok(())
}

/// Probe policies 1, 2, 4, ... up to `n_max` until one is not violated, then
/// binary-search the boundary.
pub fn measure_capacity(a: &Analysed, cfg: &CheckConfig, n_max: u32) -> Result<CapacityReport, PolicyError> {
    if n_max == 0 {
        return Err(PolicyError::ZeroThreshold);
    }
    let mut probes: Vec<(u32, Verdict)> = Vec::new();
    let mut lo = 0;
    let mut hi = None;
    let mut gave_up = false;
    let mut n = 1;
    loop {
        let v = check_policy(a, n, cfg)?.verdict;
        let violated = v.is_violated();
        let unknown = v == Verdict::Unknown;
        probes.push((n, v));
        if unknown {
            gave_up = true;
            break;
        }
        if !violated {
            hi = Some(n);
            break;
        }
        lo = n;
        if n >= n_max {
            break;
        }
        n = (2 * n).min(n_max);
    }
    if let (Some(mut h), false) = (hi, gave_up) {
        while h - lo > 1 {
            let mid = lo + (h - lo) / 2;
            let v = check_policy(a, mid, cfg)?.verdict;
            let violated = v.is_violated();
            let unknown = v == Verdict::Unknown;
            probes.push((mid, v));
            if unknown {
                gave_up = true;
                break;
            }
            if violated {
                lo = mid;
            } else {
                h = mid;
            }
        }
        hi = Some(h);
    }
    check_monotone(&probes)?;
    let class_count = lo + 1;
    let exact = !gave_up
        && hi == Some(class_count)
        && probes
            .iter()
            .any(|(n, v)| *n == class_count && *v == Verdict::VerifiedComplete);
    Ok(CapacityReport {
        lower_bound_bits: channel_capacity(class_count as usize),
        class_count,
        exact,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_violations_are_reported() {
        let ok = [
            (1, Verdict::Violated(Default::default())),
            (2, Verdict::VerifiedComplete),
        ];
        assert!(check_monotone(&ok).is_ok());
        let bad = [
            (1, Verdict::VerifiedComplete),
            (2, Verdict::Violated(Default::default())),
        ];
        assert!(matches!(check_monotone(&bad), Err(PolicyError::NonMonotone(_))));
        let unknown = [(1, Verdict::Unknown), (2, Verdict::Violated(Default::default()))];
        assert!(check_monotone(&unknown).is_ok());
    }
}
