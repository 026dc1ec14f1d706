use serde::{Deserialize, Serialize};

use super::split::group_by_domain;
use super::{CorpusError, DomainKey, SourceText, TranslationRecord, Triplet};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixKind {
    /// Low side from one domain, high side from another; pairing broken.
    Unpaired,
    SingleDomain,
    MixedDomain,
}

impl std::str::FromStr for MixKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unpaired" => Ok(MixKind::Unpaired),
            "single_domain" => Ok(MixKind::SingleDomain),
            "mixed_domain" => Ok(MixKind::MixedDomain),
            other => Err(format!("mix kind must be unpaired, single_domain or mixed_domain, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixStrategy {
    pub kind: MixKind,
    pub k: usize,
    /// Unpaired: exactly two domains (low side, high side). Single domain:
    /// exactly one. Mixed: optional restriction, all domains when absent.
    pub domains: Option<Vec<DomainKey>>,
    pub seed: u64,
}

/// One SFT training example pair. For paired strategies both sides share
/// the same source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub low_source: SourceText,
    pub low: TranslationRecord,
    pub high_source: SourceText,
    pub high: TranslationRecord,
}

impl TrainingPair {
    fn paired(t: &Triplet) -> Self {
        Self { low_source: t.source.clone(), low: t.low.clone(), high_source: t.source.clone(), high: t.high.clone() }
    }
}

fn domain_members<'a>(groups: &'a [(DomainKey, Vec<&'a Triplet>)], domain: &DomainKey) -> &'a [&'a Triplet] {
    groups.iter().find(|(k, _)| k == domain).map(|(_, v)| v.as_slice()).unwrap_or(&[])
}

fn draw<'a>(
    members: &[&'a Triplet],
    k: usize,
    domain: &DomainKey,
    rng: &mut XorShift64Star,
) -> Result<Vec<&'a Triplet>, CorpusError> {
    if members.len() < k {
        return Err(CorpusError::InsufficientTriplets {
            domain: domain.clone(),
            available: members.len(),
            requested: k,
        });
    }
    Ok(rng.sample_indices(members.len(), k).into_iter().map(|i| members[i]).collect())
}

/// Chooses SFT training pairs according to `strategy`.
///
/// Draws are without replacement using the crate's portable generator:
/// single-domain and mixed-domain use `XorShift64Star::new(seed)`; unpaired
/// uses `for_key(seed, "low:<domain A>")` and `for_key(seed, "high:<domain B>")`.
/// Mixed-domain samples uniformly from the pooled triplets of the selected
/// domains, in input order.
pub fn select_training_pairs(triplets: &[Triplet], strategy: &MixStrategy) -> Result<Vec<TrainingPair>, CorpusError> {
    if strategy.k == 0 {
        return Err(CorpusError::InvalidStrategy("k must be at least 1".into()));
    }
    let groups = group_by_domain(triplets);
    let domains = strategy.domains.as_deref();
    match strategy.kind {
        MixKind::Unpaired => {
            let [a, b] = domains.unwrap_or(&[]) else {
                return Err(CorpusError::InvalidStrategy(
                    "unpaired needs exactly two domains (low side, high side)".into(),
                ));
            };
            if a == b {
                return Err(CorpusError::InvalidStrategy(format!(
                    "unpaired needs two distinct domains, got {a} twice"
                )));
            }
            let mut rng_low = XorShift64Star::for_key(strategy.seed, &format!("low:{a}"));
            let mut rng_high = XorShift64Star::for_key(strategy.seed, &format!("high:{b}"));
            let lows = draw(domain_members(&groups, a), strategy.k, a, &mut rng_low)?;
            let highs = draw(domain_members(&groups, b), strategy.k, b, &mut rng_high)?;
            Ok(lows
                .into_iter()
                .zip(highs)
                .map(|(l, h)| TrainingPair {
                    low_source: l.source.clone(),
                    low: l.low.clone(),
                    high_source: h.source.clone(),
                    high: h.high.clone(),
                })
                .collect())
        }
        MixKind::SingleDomain => {
            let [d] = domains.unwrap_or(&[]) else {
                return Err(CorpusError::InvalidStrategy("single_domain needs exactly one domain".into()));
            };
            let mut rng = XorShift64Star::new(strategy.seed);
            let picked = draw(domain_members(&groups, d), strategy.k, d, &mut rng)?;
            Ok(picked.into_iter().map(TrainingPair::paired).collect())
        }
        MixKind::MixedDomain => {
            let pool: Vec<&Triplet> = match domains {
                None => triplets.iter().collect(),
                Some(ds) => triplets.iter().filter(|t| ds.contains(&t.domain())).collect(),
            };
            if pool.len() < strategy.k {
                return Err(CorpusError::InvalidStrategy(format!(
                    "k = {} exceeds the {} available pairs",
                    strategy.k,
                    pool.len()
                )));
            }
            let mut rng = XorShift64Star::new(strategy.seed);
            Ok(rng.sample_indices(pool.len(), strategy.k).into_iter().map(|i| TrainingPair::paired(pool[i])).collect())
        }
    }
}
