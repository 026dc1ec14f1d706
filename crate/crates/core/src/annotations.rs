//! Human judgments: pointwise ratings and pairwise forced-choice votes,
//! their aggregation, and comparisons against automatic scores.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::ErrorClass;
use crate::scoring::delta_tindex;
use crate::stats::{
    majority_vote, mean, pearson, sample_variance, sentence_bleu, spearman, Choice, Correlation, StatsError,
};

pub const MAX_RATING: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointwiseRating {
    pub item_id: String,
    pub annotator_id: String,
    pub rating: u8,
}

/// `choice` names the translation with more translationese.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseVote {
    pub pair_id: String,
    pub annotator_id: String,
    pub choice: Choice,
}

/// Binds a pair to its source and the two translations shown as A and B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairManifestEntry {
    pub pair_id: String,
    pub source_id: String,
    pub translation_a: String,
    pub translation_b: String,
    /// Reserved for span-level annotations; carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairJudgment {
    pub pair_id: String,
    pub majority: Choice,
    pub agreement_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRating {
    pub item_id: String,
    pub mean: f64,
    /// Sample standard deviation; 0 when the item has a single rating.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: rating {rating} outside 0..={MAX_RATING}")]
    RatingOutOfRange { line: usize, rating: i64 },
    #[error("line {line}: {what} {id:?} already has an entry from annotator {annotator:?}")]
    Duplicate { line: usize, what: &'static str, id: String, annotator: String },
    #[error("line {line}: duplicate pair id {0:?} in manifest", line = .1)]
    DuplicatePair(String, usize),
    #[error("pair {pair_id:?} has {got} votes, expected {expected}")]
    VoteCount { pair_id: String, expected: usize, got: usize },
    #[error("raters per pair must be odd and at least 1, got {0}")]
    RaterCount(usize),
    #[error("no method choice for pair {0:?}")]
    MissingChoice(String),
    #[error("no score for {0:?}")]
    MissingScore(String),
    #[error("no text for translation {0:?}")]
    MissingText(String),
    #[error("pair {0:?} is not in the manifest")]
    MissingPair(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AnnotationError {
    pub fn class(&self) -> ErrorClass {
        match self {
            AnnotationError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

fn jsonl<R: BufRead, T: serde::de::DeserializeOwned>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, T), AnnotationError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(
            serde_json::from_str(&line)
                .map(|v| (i + 1, v))
                .map_err(|e| AnnotationError::Malformed { line: i + 1, message: e.to_string() }),
        )
    })
}

#[derive(Deserialize)]
struct RawRating {
    item_id: String,
    annotator_id: String,
    rating: i64,
}

pub fn parse_pointwise<R: BufRead>(reader: R) -> Result<Vec<PointwiseRating>, AnnotationError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in jsonl::<_, RawRating>(reader) {
        let (line, raw) = r?;
        if !(0..=i64::from(MAX_RATING)).contains(&raw.rating) {
            return Err(AnnotationError::RatingOutOfRange { line, rating: raw.rating });
        }
        if !seen.insert((raw.item_id.clone(), raw.annotator_id.clone())) {
            return Err(AnnotationError::Duplicate {
                line,
                what: "item",
                id: raw.item_id,
                annotator: raw.annotator_id,
            });
        }
        out.push(PointwiseRating { item_id: raw.item_id, annotator_id: raw.annotator_id, rating: raw.rating as u8 });
    }
    Ok(out)
}

pub fn parse_pairwise<R: BufRead>(reader: R) -> Result<Vec<PairwiseVote>, AnnotationError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in jsonl::<_, PairwiseVote>(reader) {
        let (line, v) = r?;
        if !seen.insert((v.pair_id.clone(), v.annotator_id.clone())) {
            return Err(AnnotationError::Duplicate { line, what: "pair", id: v.pair_id, annotator: v.annotator_id });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn parse_manifest<R: BufRead>(reader: R) -> Result<Vec<PairManifestEntry>, AnnotationError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in jsonl::<_, PairManifestEntry>(reader) {
        let (line, e) = r?;
        if !seen.insert(e.pair_id.clone()) {
            return Err(AnnotationError::DuplicatePair(e.pair_id, line));
        }
        out.push(e);
    }
    Ok(out)
}

/// Per-item mean and spread, sorted by item id.
pub fn aggregate_pointwise(ratings: &[PointwiseRating]) -> Vec<ItemRating> {
    let mut by_item: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in ratings {
        by_item.entry(&r.item_id).or_default().push(f64::from(r.rating));
    }
    by_item
        .into_iter()
        .map(|(id, v)| ItemRating {
            item_id: id.to_string(),
            mean: mean(&v),
            std: if v.len() > 1 { sample_variance(&v).sqrt() } else { 0.0 },
            n: v.len(),
        })
        .collect()
}

/// Majority vote per pair, sorted by pair id. Every pair must carry exactly
/// `raters_per_pair` votes.
pub fn aggregate_pairwise(
    votes: &[PairwiseVote],
    raters_per_pair: usize,
) -> Result<Vec<PairJudgment>, AnnotationError> {
    if raters_per_pair == 0 || raters_per_pair.is_multiple_of(2) {
        return Err(AnnotationError::RaterCount(raters_per_pair));
    }
    let mut by_pair: BTreeMap<&str, Vec<Choice>> = BTreeMap::new();
    for v in votes {
        by_pair.entry(&v.pair_id).or_default().push(v.choice);
    }
    by_pair
        .into_iter()
        .map(|(id, choices)| {
            if choices.len() != raters_per_pair {
                return Err(AnnotationError::VoteCount {
                    pair_id: id.to_string(),
                    expected: raters_per_pair,
                    got: choices.len(),
                });
            }
            let m = majority_vote(&choices)?;
            Ok(PairJudgment { pair_id: id.to_string(), majority: m.choice, agreement_count: m.agreement })
        })
        .collect()
}

/// The side with the larger score; `None` when the scores are equal.
pub fn choice_from_scores(score_a: f64, score_b: f64) -> Option<Choice> {
    if score_a > score_b {
        Some(Choice::A)
    } else if score_b > score_a {
        Some(Choice::B)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketAccuracy {
    pub agreement_count: usize,
    pub n: usize,
    pub correct: usize,
    /// `None` for an empty bucket.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementTable {
    pub buckets: Vec<BucketAccuracy>,
    pub overall: BucketAccuracy,
    /// Pairs where the method's two scores were equal; counted incorrect.
    pub ties: usize,
}

fn bucket(agreement_count: usize, n: usize, correct: usize) -> BucketAccuracy {
    BucketAccuracy { agreement_count, n, correct, accuracy: (n > 0).then(|| correct as f64 / n as f64) }
}

/// Agreement of a method with the human majority, bucketed by how many
/// of the `raters` annotators sided with the majority. A `None` method
/// choice is a tie and counts as incorrect. `overall.agreement_count` is 0.
pub fn method_agreement_by_bucket(
    judgments: &[PairJudgment],
    method_choices: &HashMap<String, Option<Choice>>,
    raters: usize,
) -> Result<AgreementTable, AnnotationError> {
    if raters == 0 || raters.is_multiple_of(2) {
        return Err(AnnotationError::RaterCount(raters));
    }
    let lo = raters / 2 + 1;
    let mut counts: BTreeMap<usize, (usize, usize)> = (lo..=raters).map(|k| (k, (0, 0))).collect();
    let mut ties = 0;
    for j in judgments {
        let choice = method_choices.get(&j.pair_id).ok_or_else(|| AnnotationError::MissingChoice(j.pair_id.clone()))?;
        let entry = counts.entry(j.agreement_count).or_insert((0, 0));
        entry.0 += 1;
        match choice {
            Some(c) if *c == j.majority => entry.1 += 1,
            Some(_) => {}
            None => ties += 1,
        }
    }
    let (n, correct) = counts.values().fold((0, 0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    Ok(AgreementTable {
        buckets: counts.into_iter().map(|(k, (n, c))| bucket(k, n, c)).collect(),
        overall: bucket(0, n, correct),
        ties,
    })
}

/// Pearson correlation between item scores and mean human ratings, over the
/// rated items (each must have a score).
pub fn pointwise_correlation(
    item_scores: &HashMap<String, f64>,
    ratings: &[ItemRating],
) -> Result<Correlation, AnnotationError> {
    let mut x = Vec::with_capacity(ratings.len());
    let mut y = Vec::with_capacity(ratings.len());
    for r in ratings {
        let s = item_scores.get(&r.item_id).ok_or_else(|| AnnotationError::MissingScore(r.item_id.clone()))?;
        x.push(*s);
        y.push(r.mean);
    }
    Ok(pearson(&x, &y)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRow {
    pub pair_id: String,
    pub agreement_count: usize,
    pub pairwise_bleu: f64,
    pub delta_tindex: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementBucket {
    pub agreement_count: usize,
    pub n: usize,
    pub mean_bleu: Option<f64>,
    pub mean_delta_tindex: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementReport {
    pub rows: Vec<DisagreementRow>,
    pub buckets: Vec<DisagreementBucket>,
    /// Spearman correlation with agreement count; `None` when undefined
    /// (for example, every pair in one bucket).
    pub bleu_vs_agreement: Option<Correlation>,
    pub delta_vs_agreement: Option<Correlation>,
}

/// Character-level BLEU of A against B and |ΔT-index| per judged pair,
/// their bucket means, and rank correlations with agreement count.
pub fn disagreement_analysis(
    manifest: &[PairManifestEntry],
    texts: &HashMap<String, String>,
    tindex: &HashMap<String, f64>,
    judgments: &[PairJudgment],
    raters: usize,
) -> Result<DisagreementReport, AnnotationError> {
    if raters == 0 || raters.is_multiple_of(2) {
        return Err(AnnotationError::RaterCount(raters));
    }
    let by_id: HashMap<&str, &PairManifestEntry> = manifest.iter().map(|m| (m.pair_id.as_str(), m)).collect();
    let mut rows = Vec::with_capacity(judgments.len());
    for j in judgments {
        let m = by_id.get(j.pair_id.as_str()).ok_or_else(|| AnnotationError::MissingPair(j.pair_id.clone()))?;
        let text = |id: &String| texts.get(id).ok_or_else(|| AnnotationError::MissingText(id.clone()));
        let score = |id: &String| tindex.get(id).copied().ok_or_else(|| AnnotationError::MissingScore(id.clone()));
        let a: Vec<String> = text(&m.translation_a)?.chars().filter(|c| !c.is_whitespace()).map(String::from).collect();
        let b: Vec<String> = text(&m.translation_b)?.chars().filter(|c| !c.is_whitespace()).map(String::from).collect();
        rows.push(DisagreementRow {
            pair_id: j.pair_id.clone(),
            agreement_count: j.agreement_count,
            pairwise_bleu: sentence_bleu(&a, &b)?,
            delta_tindex: delta_tindex(score(&m.translation_a)?, score(&m.translation_b)?),
        });
    }
    let buckets = (raters / 2 + 1..=raters)
        .map(|k| {
            let members: Vec<&DisagreementRow> = rows.iter().filter(|r| r.agreement_count == k).collect();
            let avg = |f: fn(&DisagreementRow) -> f64| {
                (!members.is_empty()).then(|| mean(&members.iter().map(|r| f(r)).collect::<Vec<_>>()))
            };
            DisagreementBucket {
                agreement_count: k,
                n: members.len(),
                mean_bleu: avg(|r| r.pairwise_bleu),
                mean_delta_tindex: avg(|r| r.delta_tindex),
            }
        })
        .collect();
    let agree: Vec<f64> = rows.iter().map(|r| r.agreement_count as f64).collect();
    let bleu: Vec<f64> = rows.iter().map(|r| r.pairwise_bleu).collect();
    let delta: Vec<f64> = rows.iter().map(|r| r.delta_tindex).collect();
    Ok(DisagreementReport {
        bleu_vs_agreement: spearman(&bleu, &agree).ok(),
        delta_vs_agreement: spearman(&delta, &agree).ok(),
        rows,
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XorShift64Star;

    fn votes(pair: &str, cs: &[Choice]) -> Vec<PairwiseVote> {
        cs.iter()
            .enumerate()
            .map(|(i, &c)| PairwiseVote { pair_id: pair.into(), annotator_id: format!("r{i}"), choice: c })
            .collect()
    }

    use Choice::{A, B};

    #[test]
    fn pointwise_ingest_and_aggregate() {
        let text = "{\"item_id\":\"x\",\"annotator_id\":\"a\",\"rating\":1}\n\
                    {\"item_id\":\"x\",\"annotator_id\":\"b\",\"rating\":2}\n\
                    {\"item_id\":\"x\",\"annotator_id\":\"c\",\"rating\":3}\n\
                    {\"item_id\":\"y\",\"annotator_id\":\"a\",\"rating\":5}\n";
        let r = aggregate_pointwise(&parse_pointwise(text.as_bytes()).unwrap());
        assert_eq!(r[0], ItemRating { item_id: "x".into(), mean: 2.0, std: 1.0, n: 3 });
        assert_eq!(r[1], ItemRating { item_id: "y".into(), mean: 5.0, std: 0.0, n: 1 });
        let bad = r#"{"item_id":"x","annotator_id":"a","rating":6}"#;
        assert!(matches!(parse_pointwise(bad.as_bytes()), Err(AnnotationError::RatingOutOfRange { rating: 6, .. })));
        let neg = r#"{"item_id":"x","annotator_id":"a","rating":-1}"#;
        assert!(parse_pointwise(neg.as_bytes()).is_err());
        let dup = "{\"item_id\":\"x\",\"annotator_id\":\"a\",\"rating\":1}\n{\"item_id\":\"x\",\"annotator_id\":\"a\",\"rating\":2}";
        assert!(matches!(parse_pointwise(dup.as_bytes()), Err(AnnotationError::Duplicate { line: 2, .. })));
    }

    #[test]
    fn twelve_raters_match_direct_formula() {
        let mut rng = XorShift64Star::new(12);
        let ratings: Vec<PointwiseRating> = (0..12)
            .map(|i| PointwiseRating {
                item_id: "it".into(),
                annotator_id: format!("r{i}"),
                rating: rng.below(6) as u8,
            })
            .collect();
        let vals: Vec<f64> = ratings.iter().map(|r| r.rating as f64).collect();
        let m = vals.iter().sum::<f64>() / 12.0;
        let sd = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 11.0).sqrt();
        let agg = &aggregate_pointwise(&ratings)[0];
        assert!((agg.mean - m).abs() < 1e-12);
        assert!((agg.std - sd).abs() < 1e-12);
        assert!((0.0..=5.0).contains(&agg.mean));
    }

    #[test]
    fn pairwise_majorities() {
        let mut v = votes("p1", &[A, A, A, B, B]);
        v.extend(votes("p2", &[B, B, B, B, B]));
        let j = aggregate_pairwise(&v, 5).unwrap();
        assert_eq!(j[0], PairJudgment { pair_id: "p1".into(), majority: A, agreement_count: 3 });
        assert_eq!(j[1].agreement_count, 5);
        let mut reordered = v.clone();
        reordered.reverse();
        assert_eq!(aggregate_pairwise(&reordered, 5).unwrap(), j);
        assert!(matches!(
            aggregate_pairwise(&votes("p", &[A, A, B, B]), 5),
            Err(AnnotationError::VoteCount { got: 4, .. })
        ));
        assert!(matches!(aggregate_pairwise(&votes("p", &[A, A, B, B]), 4), Err(AnnotationError::RaterCount(4))));
    }

    fn judgments(spec: &[(usize, Choice)]) -> Vec<PairJudgment> {
        spec.iter()
            .enumerate()
            .map(|(i, &(k, c))| PairJudgment { pair_id: format!("p{i}"), majority: c, agreement_count: k })
            .collect()
    }

    #[test]
    fn identity_and_inverted_methods() {
        let js = judgments(&[(3, A), (4, B), (5, A), (5, B)]);
        let same: HashMap<String, Option<Choice>> = js.iter().map(|j| (j.pair_id.clone(), Some(j.majority))).collect();
        let t = method_agreement_by_bucket(&js, &same, 5).unwrap();
        assert_eq!(t.buckets.len(), 3);
        assert!(t.buckets.iter().all(|b| b.accuracy == Some(1.0)));
        let inv: HashMap<String, Option<Choice>> =
            js.iter().map(|j| (j.pair_id.clone(), Some(j.majority.flipped()))).collect();
        let t = method_agreement_by_bucket(&js, &inv, 5).unwrap();
        assert!(t.buckets.iter().all(|b| b.accuracy == Some(0.0)));
        let mut missing = same.clone();
        missing.remove("p0");
        assert!(matches!(method_agreement_by_bucket(&js, &missing, 5), Err(AnnotationError::MissingChoice(_))));
    }

    #[test]
    fn planted_agreement_matches_counting() {
        let mut rng = XorShift64Star::new(80);
        let js: Vec<PairJudgment> = (0..150)
            .map(|i| PairJudgment {
                pair_id: format!("p{i}"),
                majority: if rng.below(2) == 0 { A } else { B },
                agreement_count: 3 + rng.below(3) as usize,
            })
            .collect();
        let mut choices = HashMap::new();
        for j in &js {
            let roll = rng.next_f64();
            let c = if roll < 0.8 {
                Some(j.majority)
            } else if roll < 0.95 {
                Some(j.majority.flipped())
            } else {
                None
            };
            choices.insert(j.pair_id.clone(), c);
        }
        let t = method_agreement_by_bucket(&js, &choices, 5).unwrap();
        for b in &t.buckets {
            let members: Vec<&PairJudgment> = js.iter().filter(|j| j.agreement_count == b.agreement_count).collect();
            let correct = members.iter().filter(|j| choices[&j.pair_id] == Some(j.majority)).count();
            assert_eq!((b.n, b.correct), (members.len(), correct));
        }
        let weighted: f64 = t.buckets.iter().map(|b| b.accuracy.unwrap() * b.n as f64).sum::<f64>() / 150.0;
        assert!((weighted - t.overall.accuracy.unwrap()).abs() < 1e-12);
        assert_eq!(t.ties, choices.values().filter(|c| c.is_none()).count());
    }

    #[test]
    fn ties_count_as_incorrect() {
        assert_eq!(choice_from_scores(1.0, 1.0), None);
        assert_eq!(choice_from_scores(2.0, 1.0), Some(A));
        let js = judgments(&[(5, A)]);
        let c: HashMap<String, Option<Choice>> = [("p0".to_string(), None)].into();
        let t = method_agreement_by_bucket(&js, &c, 5).unwrap();
        assert_eq!((t.overall.correct, t.ties), (0, 1));
    }

    #[test]
    fn pointwise_correlation_alignment() {
        let ratings = vec![
            ItemRating { item_id: "a".into(), mean: 1.0, std: 0.0, n: 1 },
            ItemRating { item_id: "b".into(), mean: 2.0, std: 0.0, n: 1 },
            ItemRating { item_id: "c".into(), mean: 4.0, std: 0.0, n: 1 },
        ];
        let same: HashMap<String, f64> = ratings.iter().map(|r| (r.item_id.clone(), r.mean)).collect();
        assert!((pointwise_correlation(&same, &ratings).unwrap().r - 1.0).abs() < 1e-12);
        let anti: HashMap<String, f64> = ratings.iter().map(|r| (r.item_id.clone(), -r.mean)).collect();
        assert!((pointwise_correlation(&anti, &ratings).unwrap().r + 1.0).abs() < 1e-12);
        let mut partial = same.clone();
        partial.remove("c");
        assert!(matches!(pointwise_correlation(&partial, &ratings), Err(AnnotationError::MissingScore(_))));
    }

    #[test]
    fn disagreement_table() {
        let mut manifest = Vec::new();
        let mut texts = HashMap::new();
        let mut scores = HashMap::new();
        let mut js = Vec::new();
        // Planted: higher agreement pairs get larger |ΔT| and less similar text.
        for i in 0..9 {
            let k = 3 + i % 3;
            let (a, b) = (format!("a{i}"), format!("b{i}"));
            manifest.push(PairManifestEntry {
                pair_id: format!("p{i}"),
                source_id: format!("s{i}"),
                translation_a: a.clone(),
                translation_b: b.clone(),
                spans: None,
            });
            texts.insert(a.clone(), "我们今天去公园散步了".to_string());
            let changed: String = "我们今天去公园散步了"
                .chars()
                .enumerate()
                .map(|(j, c)| if j < 2 * (k - 2) { '他' } else { c })
                .collect();
            texts.insert(b.clone(), changed);
            scores.insert(a, 0.1 * k as f64);
            scores.insert(b, -0.1 * k as f64);
            js.push(PairJudgment { pair_id: format!("p{i}"), majority: A, agreement_count: k });
        }
        let r = disagreement_analysis(&manifest, &texts, &scores, &js, 5).unwrap();
        assert_eq!(r.buckets.len(), 3);
        assert!(r.delta_vs_agreement.unwrap().r > 0.0);
        assert!(r.bleu_vs_agreement.unwrap().r < 0.0);

        // Identical translations: BLEU 1 and no T-index difference.
        texts.insert("b0".into(), texts["a0"].clone());
        scores.insert("b0".into(), scores["a0"]);
        let r = disagreement_analysis(&manifest, &texts, &scores, &js[..1], 5).unwrap();
        assert_eq!((r.rows[0].pairwise_bleu, r.rows[0].delta_tindex), (1.0, 0.0));
        texts.remove("a1");
        assert!(matches!(
            disagreement_analysis(&manifest, &texts, &scores, &js, 5),
            Err(AnnotationError::MissingText(_))
        ));
    }

    #[test]
    fn manifest_keeps_spans() {
        let line = r#"{"pair_id":"p","source_id":"s","translation_a":"a","translation_b":"b","spans":[[0,3]]}"#;
        let m = parse_manifest(line.as_bytes()).unwrap();
        assert!(m[0].spans.is_some());
    }
}
