use std::collections::HashMap;

use super::StatsError;

const MAX_ORDER: usize = 4;

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            let key: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU up to 4-grams against a single reference.
///
/// Modified (clipped) precision per order. Orders with no hypothesis n-grams
/// are left out of the geometric mean. Unigram precision is unsmoothed, so
/// no unigram overlap gives 0; orders 2..4 use add-one smoothing on both
/// numerator and denominator. Brevity penalty exp(1 − r/h) when h < r.
pub fn sentence_bleu<T: AsRef<str>>(hyp: &[T], reference: &[T]) -> Result<f64, StatsError> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=MAX_ORDER {
        let candidate = hyp.len().saturating_sub(n - 1);
        if candidate == 0 {
            continue;
        }
        let hyp_counts = ngram_counts(hyp, n);
        let ref_counts = ngram_counts(reference, n);
        let matched: usize = hyp_counts.iter().map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0))).sum();
        let precision = if n == 1 {
            if matched == 0 {
                return Ok(0.0);
            }
            matched as f64 / candidate as f64
        } else {
            (matched + 1) as f64 / (candidate + 1) as f64
        };
        log_sum += precision.ln();
        orders += 1;
    }
    let (h, r) = (hyp.len() as f64, reference.len() as f64);
    let bp = if h < r { (1.0 - r / h).exp() } else { 1.0 };
    Ok(bp * (log_sum / orders as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity() {
        let t = toks("the cat sat on the mat");
        assert_eq!(sentence_bleu(&t, &t).unwrap(), 1.0);
        assert_eq!(sentence_bleu(&toks("a"), &toks("a")).unwrap(), 1.0);
    }

    #[test]
    fn hand_example() {
        let b = sentence_bleu(&toks("a b c"), &toks("a b d")).unwrap();
        let want = (2.0f64 / 9.0).powf(1.0 / 3.0);
        assert!((b - want).abs() < 1e-12);
        assert!((b - 0.606).abs() < 1e-3);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(sentence_bleu(&toks("x y z"), &toks("a b c")).unwrap(), 0.0);
    }

    #[test]
    fn brevity_penalty_applies() {
        let b = sentence_bleu(&toks("a b"), &toks("a b c d")).unwrap();
        // p1 = 1, p2 = 2/2 -> geometric mean 1, BP = exp(1 - 2)
        assert!((b - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        let e: Vec<&str> = vec![];
        assert_eq!(sentence_bleu(&e, &toks("a")), Err(StatsError::Empty));
    }
}
