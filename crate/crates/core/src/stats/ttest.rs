use serde::{Deserialize, Serialize};

use super::{check_finite, mean, sample_variance, student_t_two_sided_p, StatsError};
use crate::serde_util::f64_nonfinite;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestVariant {
    #[default]
    Welch,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    #[serde(with = "f64_nonfinite")]
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Independent two-sample t-test (Welch by default).
///
/// If both groups have zero variance the test is undefined for equal means
/// ([`StatsError::UndefinedT`]); for unequal means `t` is infinite and `p = 0`.
pub fn ttest_independent(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTestResult, StatsError> {
    for g in [a, b] {
        if g.len() < 2 {
            return Err(StatsError::TooFew { needed: 2, got: g.len() });
        }
        check_finite(g)?;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a), sample_variance(b));
    let diff = ma - mb;
    let (se, df) = match variant {
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = if se2 > 0.0 { se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0)) } else { na + nb - 2.0 };
            (se2.sqrt(), df)
        }
        TTestVariant::Pooled => {
            let df = na + nb - 2.0;
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
    };
    finish(diff, se, df)
}

fn finish(diff: f64, se: f64, df: f64) -> Result<TTestResult, StatsError> {
    if se == 0.0 {
        if diff == 0.0 {
            return Err(StatsError::UndefinedT);
        }
        return Ok(TTestResult { t: f64::INFINITY.copysign(diff), df, p: 0.0 });
    }
    let t = diff / se;
    Ok(TTestResult { t, df, p: student_t_two_sided_p(t, df) })
}

/// One-sample t-test of `xs` against mean `mu`.
pub fn ttest_one_sample(xs: &[f64], mu: f64) -> Result<TTestResult, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: xs.len() });
    }
    check_finite(xs)?;
    let n = xs.len() as f64;
    let m = mean(xs);
    let v = sample_variance(xs);
    if v == 0.0 {
        return Err(StatsError::ZeroVarianceDifferences { mean: m - mu });
    }
    finish(m - mu, (v / n).sqrt(), n - 1.0)
}

/// Paired t-test: one-sample test on `a[i] - b[i]`.
pub fn ttest_paired(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    ttest_one_sample(&d, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = ttest_independent(&a, &a, TTestVariant::Welch).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pooled_example() {
        let r = ttest_independent(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], TTestVariant::Pooled).unwrap();
        assert!((r.t + 3.674_234_614_174_767).abs() < 1e-12);
        assert_eq!(r.df, 4.0);
        assert!((r.p - 0.0213).abs() < 5e-4);
    }

    #[test]
    fn welch_equal_variance_matches_pooled_t() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        let w = ttest_independent(&a, &b, TTestVariant::Welch).unwrap();
        let p = ttest_independent(&a, &b, TTestVariant::Pooled).unwrap();
        assert!((w.t - p.t).abs() < 1e-12);
        assert!((w.df - 4.0).abs() < 1e-12);
    }

    #[test]
    fn location_invariance() {
        let a = [1.0, 2.5, 3.0, 0.2];
        let b = [4.0, 5.0, 6.5];
        let r1 = ttest_independent(&a, &b, TTestVariant::Welch).unwrap();
        let sa: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        let sb: Vec<f64> = b.iter().map(|x| x + 100.0).collect();
        let r2 = ttest_independent(&sa, &sb, TTestVariant::Welch).unwrap();
        assert!((r1.t - r2.t).abs() < 1e-9 && (r1.p - r2.p).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(ttest_independent(&[2.0, 2.0], &[2.0, 2.0], TTestVariant::Welch), Err(StatsError::UndefinedT));
        let r = ttest_independent(&[1.0, 1.0], &[2.0, 2.0], TTestVariant::Welch).unwrap();
        assert_eq!((r.t, r.p), (f64::NEG_INFINITY, 0.0));
        assert!(matches!(ttest_paired(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::ZeroVarianceDifferences { .. })));
    }

    #[test]
    fn paired_reduces_to_one_sample() {
        let a = [3.0, 4.0, 5.0, 7.0];
        let b = [2.0, 3.0, 4.0, 5.0];
        let p = ttest_paired(&a, &b).unwrap();
        let o = ttest_one_sample(&[1.0, 1.0, 1.0, 2.0], 0.0).unwrap();
        assert_eq!(p, o);
        // mean 1.25, sd 0.5, n 4 -> t = 5
        assert!((o.t - 5.0).abs() < 1e-12);
        assert_eq!(o.df, 3.0);
    }
}
