use serde::{Deserialize, Serialize};

use super::{CorpusError, DomainKey, Triplet};
use crate::rng::XorShift64Star;

/// Per-domain split sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_n: usize,
    pub valid_n: usize,
    pub test_n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<Triplet>,
    pub valid: Vec<Triplet>,
    pub test: Vec<Triplet>,
}

/// Groups triplets by domain in order of first appearance.
pub(crate) fn group_by_domain(triplets: &[Triplet]) -> Vec<(DomainKey, Vec<&Triplet>)> {
    let mut groups: Vec<(DomainKey, Vec<&Triplet>)> = Vec::new();
    for t in triplets {
        let d = t.domain();
        match groups.iter_mut().find(|(k, _)| *k == d) {
            Some((_, v)) => v.push(t),
            None => groups.push((d, vec![t])),
        }
    }
    groups
}

/// Seeded random split, applied independently within each domain.
///
/// Each domain draws `train_n + valid_n + test_n` triplets without
/// replacement from its own stream (`XorShift64Star::for_key(seed, "genre/author")`);
/// the first `train_n` draws go to train, the next `valid_n` to valid, and
/// the rest to test. Output lists concatenate domains in first-seen order.
pub fn split(triplets: &[Triplet], spec: &SplitSpec) -> Result<Splits, CorpusError> {
    let want = spec.train_n + spec.valid_n + spec.test_n;
    let mut out = Splits::default();
    for (domain, members) in group_by_domain(triplets) {
        if members.len() < want {
            return Err(CorpusError::InsufficientTriplets { domain, available: members.len(), requested: want });
        }
        let mut rng = XorShift64Star::for_key(spec.seed, &domain.to_string());
        let picked = rng.sample_indices(members.len(), want);
        let (train, rest) = picked.split_at(spec.train_n);
        let (valid, test) = rest.split_at(spec.valid_n);
        out.train.extend(train.iter().map(|&i| members[i].clone()));
        out.valid.extend(valid.iter().map(|&i| members[i].clone()));
        out.test.extend(test.iter().map(|&i| members[i].clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::triplet;
    use std::collections::HashSet;

    fn ids(v: &[Triplet]) -> Vec<String> {
        v.iter().map(|t| t.low.id.clone()).collect()
    }

    #[test]
    fn full_size_split() {
        let ts: Vec<Triplet> = (0..1200).map(|i| triplet(i, "OT", "qwen")).collect();
        let spec = SplitSpec { train_n: 1000, valid_n: 100, test_n: 100, seed: 7 };
        let s = split(&ts, &spec).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (1000, 100, 100));
        let mut all: HashSet<String> = HashSet::new();
        for id in ids(&s.train).into_iter().chain(ids(&s.valid)).chain(ids(&s.test)) {
            assert!(all.insert(id), "splits overlap");
        }
        let again = split(&ts, &spec).unwrap();
        assert_eq!(ids(&s.train), ids(&again.train));
        assert_eq!(ids(&s.test), ids(&again.test));
        let other = split(&ts, &SplitSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(ids(&s.test), ids(&other.test));
    }

    #[test]
    fn zero_sizes() {
        let ts: Vec<Triplet> = (0..3).map(|i| triplet(i, "OT", "qwen")).collect();
        let s = split(&ts, &SplitSpec { train_n: 0, valid_n: 0, test_n: 0, seed: 1 }).unwrap();
        assert_eq!(s, Splits::default());
    }

    #[test]
    fn per_domain_and_insufficient() {
        let mut ts: Vec<Triplet> = (0..5).map(|i| triplet(i, "OT", "qwen")).collect();
        ts.extend((0..5).map(|i| triplet(i, "news", "llama")));
        let s = split(&ts, &SplitSpec { train_n: 3, valid_n: 1, test_n: 1, seed: 0 }).unwrap();
        assert_eq!(s.train.len(), 6);
        assert_eq!(s.train.iter().filter(|t| t.source.genre == "news").count(), 3);
        let err = split(&ts, &SplitSpec { train_n: 5, valid_n: 1, test_n: 0, seed: 0 }).unwrap_err();
        assert!(matches!(err, CorpusError::InsufficientTriplets { available: 5, requested: 6, .. }));
    }
}
