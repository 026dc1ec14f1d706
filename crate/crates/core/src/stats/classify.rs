use serde::{Deserialize, Serialize};

use super::{check_finite, StatsError};
use crate::serde_util::f64_nonfinite;

/// Binary discrimination summary. Positive = high-translationese, decided
/// by `score > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvalResult {
    pub accuracy: f64,
    pub auroc: f64,
    #[serde(with = "f64_nonfinite")]
    pub threshold: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Samples dropped because their score was undefined.
    pub skipped: usize,
}

fn class_counts(labels: &[bool]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    (pos, labels.len() - pos)
}

fn validate(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    check_finite(scores)?;
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(StatsError::SingleClass { n_pos, n_neg });
    }
    Ok((n_pos, n_neg))
}

/// Indices sorted by score, ascending. Scores are validated finite.
fn sorted_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Area under the ROC curve as the Mann-Whitney U statistic over
/// `n_pos * n_neg`, with tied pairs counted 0.5.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, StatsError> {
    let (n_pos, n_neg) = validate(scores, labels)?;
    let order = sorted_order(scores);
    // Twice the positive-class rank sum, using midranks; stays integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let g = (j - i + 1) as u128;
        let twice_mid = 2 * i as u128 + g + 1;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += twice_mid * pos_in_group;
        i = j + 1;
    }
    let np = n_pos as u128;
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / (2 * np * n_neg as u128) as f64)
}

/// Best accuracy over thresholds `-inf`, midpoints of consecutive distinct
/// scores, and `+inf`, predicting positive when `score > threshold`.
/// Ties in accuracy go to the smallest threshold.
pub fn best_threshold_accuracy(scores: &[f64], labels: &[bool]) -> Result<(f64, f64), StatsError> {
    let (n_pos, _) = validate(scores, labels)?;
    let n = scores.len();
    let order = sorted_order(scores);
    let mut correct = n_pos as i64;
    let mut best = (correct, f64::NEG_INFINITY);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let pos = order[i..=j].iter().filter(|&&k| labels[k]).count() as i64;
        let neg = (j - i + 1) as i64 - pos;
        correct += neg - pos;
        let lo = scores[order[j]];
        let threshold = if j + 1 < n {
            let hi = scores[order[j + 1]];
            lo + (hi - lo) / 2.0
        } else {
            f64::INFINITY
        };
        if correct > best.0 {
            best = (correct, threshold);
        }
        i = j + 1;
    }
    Ok((best.0 as f64 / n as f64, best.1))
}

/// Drops undefined (`None` or non-finite) scores, then computes AUROC and
/// best-threshold accuracy on the rest.
pub fn evaluate_binary(scores: &[Option<f64>], labels: &[bool]) -> Result<BinaryEvalResult, StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let mut kept_scores = Vec::with_capacity(scores.len());
    let mut kept_labels = Vec::with_capacity(scores.len());
    let mut skipped = 0;
    for (s, &l) in scores.iter().zip(labels) {
        match s {
            Some(v) if v.is_finite() => {
                kept_scores.push(*v);
                kept_labels.push(l);
            }
            _ => skipped += 1,
        }
    }
    let auc = auroc(&kept_scores, &kept_labels)?;
    let (accuracy, threshold) = best_threshold_accuracy(&kept_scores, &kept_labels)?;
    let (n_pos, n_neg) = class_counts(&kept_labels);
    Ok(BinaryEvalResult { accuracy, auroc: auc, threshold, n_pos, n_neg, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(pos: &[f64], neg: &[f64]) -> (Vec<f64>, Vec<bool>) {
        let mut s = pos.to_vec();
        s.extend_from_slice(neg);
        let mut l = vec![true; pos.len()];
        l.extend(vec![false; neg.len()]);
        (s, l)
    }

    #[test]
    fn auroc_examples() {
        let (s, l) = split(&[2.0, 3.0], &[0.0, 1.0]);
        assert_eq!(auroc(&s, &l).unwrap(), 1.0);
        let (s, l) = split(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(auroc(&s, &l).unwrap(), 0.5);
        let (s, l) = split(&[0.9, 0.4], &[0.6, 0.1]);
        assert_eq!(auroc(&s, &l).unwrap(), 0.75);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(auroc(&[1.0, 2.0], &[true, true]), Err(StatsError::SingleClass { n_pos: 2, n_neg: 0 })));
        assert!(best_threshold_accuracy(&[1.0], &[false]).is_err());
    }

    #[test]
    fn threshold_examples() {
        let (s, l) = split(&[0.9, 0.4], &[0.6, 0.1]);
        let (acc, t) = best_threshold_accuracy(&s, &l).unwrap();
        assert_eq!(acc, 0.75);
        assert!((t - 0.25).abs() < 1e-15);

        let (s, l) = split(&[0.3, 0.3], &[0.3, 0.3]);
        let (acc, t) = best_threshold_accuracy(&s, &l).unwrap();
        assert_eq!(acc, 0.5);
        assert_eq!(t, f64::NEG_INFINITY);

        let (s, l) = split(&[5.0, 6.0], &[1.0, 2.0]);
        assert_eq!(best_threshold_accuracy(&s, &l).unwrap(), (1.0, 3.5));
    }

    #[test]
    fn evaluate_counts_skips() {
        let r = evaluate_binary(
            &[Some(1.0), None, Some(0.0), Some(f64::NAN), Some(2.0)],
            &[true, true, false, false, false],
        )
        .unwrap();
        assert_eq!(r.skipped, 2);
        assert_eq!((r.n_pos, r.n_neg), (1, 2));
        assert_eq!(r.auroc, 0.5);
    }
}
