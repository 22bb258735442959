use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::PairRecord;

#[derive(Debug, Error, PartialEq)]
pub enum RatioError {
    #[error("split ratios must be non-negative and finite, got {0:?}")]
    Invalid([f64; 3]),
    #[error("split ratios must sum to 1, got {0}")]
    Sum(f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<PairRecord>,
    pub val: Vec<PairRecord>,
    pub test: Vec<PairRecord>,
}

/// Partition `corpus` into train/val/test.
///
/// Pairs are grouped by `source`, groups are shuffled with a ChaCha8 stream
/// seeded by `seed`, and whole groups are dealt into train until it reaches
/// `round(ratio_train * n)` pairs, then val until the cumulative target,
/// then test. Within each split the corpus order is preserved.
pub fn split(corpus: &[PairRecord], ratios: [f64; 3], seed: u64) -> Result<Splits, RatioError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(RatioError::Invalid(ratios));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(RatioError::Sum(sum));
    }

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in corpus.iter().enumerate() {
        groups.entry(r.source.as_str()).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n = corpus.len() as f64;
    let train_target = (ratios[0] * n).round() as usize;
    let val_target = ((ratios[0] + ratios[1]) * n).round() as usize - train_target;

    let mut assignment = vec![2u8; corpus.len()];
    let (mut in_train, mut in_val) = (0usize, 0usize);
    for g in groups {
        let bucket = if in_train < train_target {
            in_train += g.len();
            0
        } else if in_val < val_target {
            in_val += g.len();
            1
        } else {
            2
        };
        for i in g {
            assignment[i] = bucket;
        }
    }

    let mut out = Splits::default();
    for (r, bucket) in corpus.iter().zip(assignment) {
        match bucket {
            0 => out.train.push(r.clone()),
            1 => out.val.push(r.clone()),
            _ => out.test.push(r.clone()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Method;

    fn pairs(n: usize) -> Vec<PairRecord> {
        (0..n)
            .map(|i| PairRecord::new(format!("f{i}"), format!("i{i}"), Method::Regex, format!("t{i}")))
            .collect()
    }

    #[test]
    fn eighty_ten_ten() {
        let s = split(&pairs(10), [0.8, 0.1, 0.1], 42).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn all_train() {
        let s = split(&pairs(7), [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(s.train.len(), 7);
        assert!(s.val.is_empty() && s.test.is_empty());
    }

    #[test]
    fn shared_source_stays_together() {
        let mut p = pairs(2);
        p[1].source = p[0].source.clone();
        for seed in 0..20 {
            let s = split(&p, [0.5, 0.5, 0.0], seed).unwrap();
            assert!(s.train.len() == 2 || s.val.len() == 2, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let p = pairs(50);
        assert_eq!(split(&p, [0.6, 0.2, 0.2], 9), split(&p, [0.6, 0.2, 0.2], 9));
        assert_ne!(split(&p, [0.6, 0.2, 0.2], 9), split(&p, [0.6, 0.2, 0.2], 10));
    }

    #[test]
    fn ratio_errors() {
        assert!(matches!(split(&pairs(3), [0.5, 0.5, 0.5], 0), Err(RatioError::Sum(_))));
        assert!(matches!(split(&pairs(3), [1.5, -0.5, 0.0], 0), Err(RatioError::Invalid(_))));
        assert!(split(&pairs(3), [0.7, 0.2, 0.1 + 1e-10], 0).is_ok());
    }
}
