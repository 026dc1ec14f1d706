//! Statistical and evaluation primitives.
//!
//! All reductions go through [`pairwise_sum`] so results are stable across
//! platforms and independent of input length quirks.

mod agreement;
mod bleu;
mod classify;
mod correlation;
pub mod linalg;
mod regression;
mod tdist;
mod ttest;

pub use agreement::{fleiss_kappa, majority_vote, Choice, MajorityVote};
pub use bleu::sentence_bleu;
pub use classify::{auroc, best_threshold_accuracy, evaluate_binary, BinaryEvalResult};
pub use correlation::{midranks, pearson, spearman, Correlation};
pub use regression::{ols, vif, RegressionReport};
pub use tdist::{ln_gamma, regularized_incomplete_beta, student_t_cdf, student_t_two_sided_p};
pub use ttest::{ttest_independent, ttest_one_sample, ttest_paired, TTestResult, TTestVariant};

use crate::error::ErrorClass;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("both classes must be present (got {n_pos} positive, {n_neg} negative)")]
    SingleClass { n_pos: usize, n_neg: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("t statistic undefined: both groups have zero variance and equal means")]
    UndefinedT,
    #[error("differences have zero variance (mean difference {mean})")]
    ZeroVarianceDifferences { mean: f64 },
    #[error("kappa undefined: expected agreement is 1 (all ratings in one category)")]
    UndefinedKappa,
    #[error("row {row} sums to {sum}, expected {expected} raters")]
    RowSum { row: usize, sum: u64, expected: u64 },
    #[error("need at least 2 raters per item")]
    TooFewRaters,
    #[error("rank-deficient design matrix; dependent columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("empty input")]
    Empty,
    #[error("majority vote needs an odd number of votes, got {0}")]
    EvenVotes(usize),
}

impl StatsError {
    pub fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample variance (n - 1 denominator). Callers guarantee `xs.len() >= 2`.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / xs.len() as f64
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_ints() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn variances() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((sample_variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert!((population_variance(&xs) - 1.25).abs() < 1e-15);
    }
}
