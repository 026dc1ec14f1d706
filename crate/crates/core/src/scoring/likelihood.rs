use super::{Normalization, ScoringError};
use crate::backend::TokenScores;
use crate::stats::{mean, pairwise_sum};

fn reduce(xs: &[f64], normalization: Normalization) -> f64 {
    match normalization {
        Normalization::PerToken => mean(xs),
        Normalization::Sum => pairwise_sum(xs),
    }
}

/// T-index: log-likelihood under the high-translationese model minus the
/// log-likelihood under the low-translationese model. Positive means more
/// translationese.
///
/// Both records must describe the same sample tokenized the same way.
pub fn tindex(
    low_model: &TokenScores,
    high_model: &TokenScores,
    normalization: Normalization,
) -> Result<f64, ScoringError> {
    if low_model.sample_id != high_model.sample_id {
        return Err(ScoringError::SampleMismatch {
            low: low_model.sample_id.clone(),
            high: high_model.sample_id.clone(),
        });
    }
    if low_model.n_tokens != high_model.n_tokens || low_model.token_logprobs.len() != high_model.token_logprobs.len() {
        return Err(ScoringError::TokenCountMismatch {
            sample_id: low_model.sample_id.clone(),
            low: low_model.n_tokens,
            high: high_model.n_tokens,
        });
    }
    if let (Some(a), Some(b)) = (&low_model.tokenizer_hash, &high_model.tokenizer_hash) {
        if a != b {
            return Err(ScoringError::TokenizerMismatch { sample_id: low_model.sample_id.clone() });
        }
    }
    Ok(reduce(&high_model.token_logprobs, normalization) - reduce(&low_model.token_logprobs, normalization))
}

/// Mean per-token log-probability.
pub fn log_likelihood(ts: &TokenScores) -> f64 {
    mean(&ts.token_logprobs)
}

pub(crate) fn log_likelihood_with(ts: &TokenScores, normalization: Normalization) -> f64 {
    reduce(&ts.token_logprobs, normalization)
}

/// Mean per-token entropy of the next-token distribution, in nats.
pub fn entropy_score(ts: &TokenScores) -> Result<f64, ScoringError> {
    entropy_with(ts, Normalization::PerToken)
}

pub(crate) fn entropy_with(ts: &TokenScores, normalization: Normalization) -> Result<f64, ScoringError> {
    let h = ts.token_entropies.as_deref().ok_or_else(|| ScoringError::missing(ts, "entropy", "token_entropies"))?;
    Ok(reduce(h, normalization))
}

/// Analytic Fast-DetectGPT discrepancy.
///
/// Under the model, log p at each position has mean −H and variance
/// M2 − H², so the realized sequence sits `(Σ log p + Σ H) / sqrt(Σ (M2 − H²))`
/// standard deviations above what sampling would give.
pub fn fast_detect_gpt(ts: &TokenScores) -> Result<f64, ScoringError> {
    let h = ts.token_entropies.as_deref().ok_or_else(|| ScoringError::missing(ts, "fdg", "token_entropies"))?;
    let m2 =
        ts.logp_second_moments.as_deref().ok_or_else(|| ScoringError::missing(ts, "fdg", "logp_second_moments"))?;
    let numerator = pairwise_sum(&ts.token_logprobs) + pairwise_sum(h);
    // Rounding can leave M2 a hair below H² on deterministic positions.
    let var: Vec<f64> = m2.iter().zip(h).map(|(m, e)| (m - e * e).max(0.0)).collect();
    let denom = pairwise_sum(&var).sqrt();
    if !(denom > 0.0) {
        return Err(ScoringError::UndefinedScore {
            sample_id: ts.sample_id.clone(),
            reason: "fdg denominator is zero (no position has log-probability variance)",
        });
    }
    Ok(numerator / denom)
}

/// Absolute T-index difference between two translations of one source.
pub fn delta_tindex(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(lp: Vec<f64>) -> TokenScores {
        TokenScores::from_logprobs("s", "m", lp)
    }

    #[test]
    fn tindex_hand_value() {
        let low = ts(vec![-1.0, -2.0]);
        let high = ts(vec![-0.5, -1.5]);
        assert_eq!(tindex(&low, &high, Normalization::PerToken).unwrap(), 0.5);
        assert_eq!(tindex(&low, &high, Normalization::Sum).unwrap(), 1.0);
        assert_eq!(tindex(&low, &low, Normalization::PerToken).unwrap(), 0.0);
    }

    #[test]
    fn tindex_rejects_mismatches() {
        let a = ts(vec![-1.0]);
        let mut b = ts(vec![-1.0, -2.0]);
        assert!(matches!(tindex(&a, &b, Normalization::PerToken), Err(ScoringError::TokenCountMismatch { .. })));
        b = TokenScores::from_logprobs("other", "m", vec![-1.0]);
        assert!(matches!(tindex(&a, &b, Normalization::PerToken), Err(ScoringError::SampleMismatch { .. })));
        let mut c = ts(vec![-1.0]);
        let mut d = ts(vec![-1.0]);
        c.tokenizer_hash = Some("x".into());
        d.tokenizer_hash = Some("y".into());
        assert!(matches!(tindex(&c, &d, Normalization::PerToken), Err(ScoringError::TokenizerMismatch { .. })));
    }

    #[test]
    fn loglik_values() {
        assert_eq!(log_likelihood(&ts(vec![-2.0, -4.0])), -3.0);
        assert_eq!(log_likelihood(&ts(vec![-0.1])), -0.1);
    }

    #[test]
    fn entropy_values() {
        let ln2 = std::f64::consts::LN_2;
        let mut r = ts(vec![-ln2; 4]);
        r.token_entropies = Some(vec![ln2; 4]);
        assert!((entropy_score(&r).unwrap() - ln2).abs() < 1e-15);
        r.token_entropies = Some(vec![0.0; 4]);
        assert_eq!(entropy_score(&r).unwrap(), 0.0);
        let mut m = ts(vec![-1.0, -1.0]);
        m.token_entropies = Some(vec![0.0, ln2]);
        assert_eq!(entropy_score(&m).unwrap(), ln2 / 2.0);
        let err = entropy_score(&ts(vec![-1.0])).unwrap_err();
        assert_eq!(err.class(), crate::ErrorClass::Capability);
    }

    /// H and M2 of a categorical distribution, computed directly.
    fn moments(p: &[f64]) -> (f64, f64) {
        let h = -p.iter().map(|q| q * q.ln()).sum::<f64>();
        let m2 = p.iter().map(|q| q * q.ln() * q.ln()).sum::<f64>();
        (h, m2)
    }

    #[test]
    fn fdg_two_way_example() {
        let (h, m2) = moments(&[0.8, 0.2]);
        let mut r = ts(vec![0.8f64.ln()]);
        r.token_entropies = Some(vec![h]);
        r.logp_second_moments = Some(vec![m2]);
        let v = fast_detect_gpt(&r).unwrap();
        assert!((v - 0.5002).abs() < 1e-3, "{v}");
    }

    #[test]
    fn fdg_deterministic_positions_error() {
        let mut r = ts(vec![0.0, 0.0]);
        r.token_entropies = Some(vec![0.0, 0.0]);
        r.logp_second_moments = Some(vec![0.0, 0.0]);
        assert!(matches!(fast_detect_gpt(&r), Err(ScoringError::UndefinedScore { .. })));
    }

    #[test]
    fn fdg_zero_when_at_mean() {
        let (h, m2) = moments(&[0.5, 0.3, 0.2]);
        let mut r = ts(vec![-h, -h]);
        r.token_entropies = Some(vec![h, h]);
        r.logp_second_moments = Some(vec![m2, m2]);
        assert!(fast_detect_gpt(&r).unwrap().abs() < 1e-15);
    }

    #[test]
    fn delta_is_symmetric() {
        assert!((delta_tindex(0.5, 0.2) - 0.3).abs() < 1e-15);
        assert_eq!(delta_tindex(0.7, 0.7), 0.0);
        assert_eq!(delta_tindex(-1.0, 2.0), delta_tindex(2.0, -1.0));
    }

    fn logprobs(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-20.0f64..0.0, n)
    }

    proptest! {
        #[test]
        fn shared_shift_cancels(
            (low, high, shift) in (1usize..40).prop_flat_map(|n| (
                prop::collection::vec(-10.0f64..-1.0, n),
                prop::collection::vec(-10.0f64..-1.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
            ))
        ) {
            let base = tindex(&ts(low.clone()), &ts(high.clone()), Normalization::PerToken).unwrap();
            let low2: Vec<f64> = low.iter().zip(&shift).map(|(a, c)| a + c).collect();
            let high2: Vec<f64> = high.iter().zip(&shift).map(|(a, c)| a + c).collect();
            let moved = tindex(&ts(low2), &ts(high2), Normalization::PerToken).unwrap();
            prop_assert!((base - moved).abs() <= 1e-12);
        }

        #[test]
        fn sum_is_n_times_mean((low, high) in (1usize..60).prop_flat_map(|n| (logprobs(n..n + 1), logprobs(n..n + 1)))) {
            let n = low.len() as f64;
            let s = tindex(&ts(low.clone()), &ts(high.clone()), Normalization::Sum).unwrap();
            let m = tindex(&ts(low.clone()), &ts(high.clone()), Normalization::PerToken).unwrap();
            let scale = pairwise_sum(&low).abs() + pairwise_sum(&high).abs();
            prop_assert!((s - n * m).abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn fdg_permutation_invariant(probs in prop::collection::vec(0.05f64..0.95, 2..12), seed in any::<u64>()) {
            let rows: Vec<(f64, f64, f64)> = probs.iter().map(|&p| {
                let (h, m2) = moments(&[p, 1.0 - p]);
                (p.ln(), h, m2)
            }).collect();
            let build = |rows: &[(f64, f64, f64)]| {
                let mut r = ts(rows.iter().map(|x| x.0).collect());
                r.token_entropies = Some(rows.iter().map(|x| x.1).collect());
                r.logp_second_moments = Some(rows.iter().map(|x| x.2).collect());
                fast_detect_gpt(&r).unwrap()
            };
            let mut shuffled = rows.clone();
            crate::rng::XorShift64Star::new(seed).shuffle(&mut shuffled);
            prop_assert!((build(&rows) - build(&shuffled)).abs() <= 1e-12);
        }
    }
}
