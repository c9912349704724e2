//! Measures over partitions of a finite secret domain.

use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("weights sum to {0}, not 1")]
    NotNormalised(String),
    #[error("negative weight {0}")]
    Negative(String),
    #[error("distribution has {have} weights, expected {want}")]
    Length { have: usize, want: usize },
    #[error("relations are over different domains ({0} vs {1} points)")]
    DomainMismatch(usize, usize),
}

/// A partition of `0..domain_size` into non-empty classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    classes: Vec<Vec<usize>>,
    domain_size: usize,
}

impl Partition {
    /// Build from a class label per point. Classes are numbered in order of
    /// first appearance.
    pub fn from_labels<K: std::hash::Hash + Eq>(labels: impl IntoIterator<Item = K>) -> Self {
        let mut index: HashMap<K, usize> = HashMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut n = 0;
        for (i, k) in labels.into_iter().enumerate() {
            let c = *index.entry(k).or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[c].push(i);
            n = i + 1;
        }
        Partition {
            classes,
            domain_size: n,
        }
    }

    /// Build from explicit classes; `None` unless they partition `0..n`.
    pub fn from_classes(classes: Vec<Vec<usize>>, n: usize) -> Option<Self> {
        let mut seen = vec![false; n];
        for c in &classes {
            if c.is_empty() {
                return None;
            }
            for &i in c {
                if i >= n || seen[i] {
                    return None;
                }
                seen[i] = true;
            }
        }
        if seen.iter().all(|s| *s) {
            Some(Partition {
                classes,
                domain_size: n,
            })
        } else {
            None
        }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// Class index of each point.
    pub fn labels(&self) -> Vec<usize> {
        let mut l = vec![0; self.domain_size];
        for (c, members) in self.classes.iter().enumerate() {
            for &i in members {
                l[i] = c;
            }
        }
        l
    }

    pub fn class_of(&self, point: usize) -> Option<&[usize]> {
        self.classes.iter().find(|c| c.contains(&point)).map(|c| c.as_slice())
    }
}

/// Input distribution, either over domain points or directly over classes.
/// When both are present the per-class weights are used.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Distribution {
    pub per_point: Option<Vec<f64>>,
    pub per_class: Option<Vec<f64>>,
}

impl Distribution {
    pub fn uniform(n: usize) -> Self {
        Distribution {
            per_point: Some(vec![1.0 / n as f64; n]),
            per_class: None,
        }
    }

    pub fn per_point(w: Vec<f64>) -> Self {
        Distribution {
            per_point: Some(w),
            per_class: None,
        }
    }

    pub fn per_class(w: Vec<f64>) -> Self {
        Distribution {
            per_point: None,
            per_class: Some(w),
        }
    }

    /// Probability of each class of `p`.
    pub fn class_probabilities(&self, p: &Partition) -> Result<Vec<f64>, MetricsError> {
        let probs = if let Some(w) = &self.per_class {
            check_len(w.len(), p.class_count())?;
            w.clone()
        } else if let Some(w) = &self.per_point {
            check_len(w.len(), p.domain_size())?;
            p.classes().iter().map(|c| c.iter().map(|&i| w[i]).sum()).collect()
        } else {
            let n = p.domain_size() as f64;
            p.classes().iter().map(|c| c.len() as f64 / n).collect()
        };
        check_weights(&probs)?;
        Ok(probs)
    }
}

fn check_len(have: usize, want: usize) -> Result<(), MetricsError> {
    if have != want {
        Err(MetricsError::Length { have, want })
    } else {
        Ok(())
    }
}

fn check_weights(w: &[f64]) -> Result<(), MetricsError> {
    if let Some(x) = w.iter().find(|x| **x < 0.0 || x.is_nan()) {
        return Err(MetricsError::Negative(x.to_string()));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(MetricsError::NotNormalised(s.to_string()));
    }
    Ok(())
}

/// Shannon entropy (bits) of the class distribution.
pub fn shannon_entropy(p: &Partition, dist: &Distribution) -> Result<f64, MetricsError> {
    let probs = dist.class_probabilities(p)?;
    Ok(probs.iter().filter(|q| **q > 0.0).map(|q| -q * q.log2()).sum())
}

pub fn channel_capacity(class_count: usize) -> f64 {
    assert!(class_count >= 1, "a partition has at least one class");
    (class_count as f64).log2()
}

/// `coarser ⊑ finer`: every class of `finer` lies inside a class of `coarser`.
pub fn loi_leq(coarser: &Partition, finer: &Partition) -> Result<bool, MetricsError> {
    if coarser.domain_size() != finer.domain_size() {
        return Err(MetricsError::DomainMismatch(coarser.domain_size(), finer.domain_size()));
    }
    let labels = coarser.labels();
    Ok(finer
        .classes()
        .iter()
        .all(|c| c.iter().all(|&i| labels[i] == labels[c[0]])))
}

pub fn is_noninterfering(p: &Partition) -> bool {
    p.class_count() == 1
}

pub fn breaches(p: &Partition, n: u64) -> bool {
    p.class_count() as u64 > n
}

/// Entropy for exact rational class weights `num/den`, bracketed tightly.
/// Each term is evaluated as `p * log2(1 + (den - num)/num)` so weights
/// close to 1 keep their contribution instead of rounding it away.
pub fn entropy_interval(weights: &[(u128, u128)]) -> (f64, f64) {
    let mut sum = 0.0f64;
    for &(num, den) in weights {
        if num == 0 || num >= den {
            continue;
        }
        let p = num as f64 / den as f64;
        let gap = (den - num) as f64 / num as f64;
        sum += p * gap.ln_1p() / std::f64::consts::LN_2;
    }
    (sum * (1.0 - 1e-12), sum * (1.0 + 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn modulo_partition() -> Partition {
        Partition::from_labels((0..16).map(|h| h % 4))
    }

    #[test]
    fn modulo_entropy_and_capacity() {
        let p = modulo_partition();
        assert_eq!(p.class_count(), 4);
        assert_eq!(p.class_of(1).unwrap(), &[1, 5, 9, 13]);
        let h = shannon_entropy(&p, &Distribution::uniform(16)).unwrap();
        assert!((h - 2.0).abs() < 1e-12);
        let evens: Vec<f64> = (0..16).map(|h| if h % 2 == 0 { 0.125 } else { 0.0 }).collect();
        let h = shannon_entropy(&p, &Distribution::per_point(evens)).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(channel_capacity(4), 2.0);
    }

    #[test]
    fn tiny_probability_class() {
        let p = Partition::from_labels([0, 1]);
        let tiny = 2f64.powi(-64);
        let h = shannon_entropy(&p, &Distribution::per_class(vec![tiny, 1.0 - tiny])).unwrap();
        assert!((h - 3.46944695e-18).abs() / 3.46944695e-18 < 1e-6, "{}", h);
        let (lo, hi) = entropy_interval(&[(1, 1 << 64), ((1 << 64) - 1, 1 << 64)]);
        assert!(lo > h && hi > h);
        assert!((lo - h) / h > 0.01);
    }

    #[test]
    fn per_class_takes_precedence() {
        let p = Partition::from_labels([0, 0, 1]);
        let d = Distribution {
            per_point: Some(vec![1.0, 0.0, 0.0]),
            per_class: Some(vec![0.5, 0.5]),
        };
        assert_eq!(shannon_entropy(&p, &d).unwrap(), 1.0);
    }

    #[test]
    fn single_class() {
        let p = Partition::from_labels([7, 7, 7]);
        assert_eq!(shannon_entropy(&p, &Distribution::uniform(3)).unwrap(), 0.0);
        assert!(is_noninterfering(&p));
        assert_eq!(channel_capacity(1), 0.0);
        assert!(!breaches(&p, 1));
    }

    #[test]
    fn refinement_examples() {
        let bottom = Partition::from_labels([0; 16]);
        let parity = Partition::from_labels((0..16).map(|h| h % 2));
        let identity = Partition::from_labels(0..16);
        assert!(loi_leq(&bottom, &modulo_partition()).unwrap());
        assert!(loi_leq(&parity, &identity).unwrap());
        assert!(!loi_leq(&identity, &parity).unwrap());
        let a = Partition::from_classes(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let b = Partition::from_classes(vec![vec![0, 2], vec![1, 3]], 4).unwrap();
        assert!(!loi_leq(&a, &b).unwrap());
        assert!(!loi_leq(&b, &a).unwrap());
    }

    #[test]
    fn breach_boundary() {
        let p = modulo_partition();
        assert!(breaches(&p, 3));
        assert!(!breaches(&p, 4));
        assert!(!is_noninterfering(&p));
    }

    #[test]
    fn rejects_bad_weights() {
        let p = Partition::from_labels([0, 1]);
        assert!(shannon_entropy(&p, &Distribution::per_point(vec![0.5, 0.6])).is_err());
        assert!(shannon_entropy(&p, &Distribution::per_point(vec![1.5, -0.5])).is_err());
        assert!(Partition::from_classes(vec![vec![0], vec![0, 1]], 2).is_none());
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_capacity(labels in proptest::collection::vec(0u8..5, 1..12),
                                       raw in proptest::collection::vec(0.01f64..1.0, 12)) {
            let p = Partition::from_labels(labels.iter().copied());
            let w: Vec<f64> = raw[..p.domain_size()].to_vec();
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / s).collect();
            let h = shannon_entropy(&p, &Distribution::per_point(w)).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= channel_capacity(p.class_count()) + 1e-9);
            let u = shannon_entropy(&p, &Distribution::per_class(vec![1.0 / p.class_count() as f64; p.class_count()])).unwrap();
            prop_assert!((u - channel_capacity(p.class_count())).abs() < 1e-9);
        }
    }
}
