use serde::{Deserialize, Serialize};

use super::StatsError;

/// Side of a forced-choice pairwise judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn flipped(self) -> Self {
        match self {
            Choice::A => Choice::B,
            Choice::B => Choice::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityVote {
    pub choice: Choice,
    /// Number of votes agreeing with `choice`.
    pub agreement: usize,
}

/// Majority of an odd number of forced-choice votes.
pub fn majority_vote(votes: &[Choice]) -> Result<MajorityVote, StatsError> {
    if votes.is_empty() {
        return Err(StatsError::Empty);
    }
    if votes.len().is_multiple_of(2) {
        return Err(StatsError::EvenVotes(votes.len()));
    }
    let a = votes.iter().filter(|&&v| v == Choice::A).count();
    let b = votes.len() - a;
    Ok(if a > b {
        MajorityVote { choice: Choice::A, agreement: a }
    } else {
        MajorityVote { choice: Choice::B, agreement: b }
    })
}

/// Fleiss' kappa over an items × categories count matrix where every row
/// sums to `raters`.
pub fn fleiss_kappa(counts: &[Vec<u64>], raters: u64) -> Result<f64, StatsError> {
    if raters < 2 {
        return Err(StatsError::TooFewRaters);
    }
    if counts.is_empty() {
        return Err(StatsError::Empty);
    }
    let n_items = counts.len() as f64;
    let n = raters as f64;
    let n_cat = counts[0].len();
    let mut cat_totals = vec![0u64; n_cat];
    let mut p_bar = 0.0;
    for (row, c) in counts.iter().enumerate() {
        if c.len() != n_cat {
            return Err(StatsError::LengthMismatch { left: n_cat, right: c.len() });
        }
        let sum: u64 = c.iter().sum();
        if sum != raters {
            return Err(StatsError::RowSum { row, sum, expected: raters });
        }
        let sq: u64 = c.iter().map(|v| v * v).sum();
        p_bar += (sq - raters) as f64 / (n * (n - 1.0));
        for (t, v) in cat_totals.iter_mut().zip(c) {
            *t += v;
        }
    }
    p_bar /= n_items;
    let total = n_items * n;
    let p_e: f64 = cat_totals.iter().map(|&t| (t as f64 / total).powi(2)).sum();
    if 1.0 - p_e <= f64::EPSILON {
        return Err(StatsError::UndefinedKappa);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Choice::{A, B};

    #[test]
    fn majority_examples() {
        assert_eq!(majority_vote(&[A, A, B]).unwrap(), MajorityVote { choice: A, agreement: 2 });
        assert_eq!(majority_vote(&[A; 5]).unwrap(), MajorityVote { choice: A, agreement: 5 });
        assert_eq!(majority_vote(&[A, B]), Err(StatsError::EvenVotes(2)));
        assert_eq!(majority_vote(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn kappa_hand_example() {
        let k = fleiss_kappa(&[vec![3, 0], vec![2, 1]], 3).unwrap();
        assert!((k + 0.2).abs() < 1e-12);
    }

    #[test]
    fn kappa_unanimous_spread() {
        let k = fleiss_kappa(&[vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 4], vec![4, 0, 0]], 4).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_errors() {
        assert_eq!(fleiss_kappa(&[vec![3, 0], vec![3, 0]], 3), Err(StatsError::UndefinedKappa));
        assert!(matches!(fleiss_kappa(&[vec![2, 0]], 3), Err(StatsError::RowSum { .. })));
        assert_eq!(fleiss_kappa(&[vec![1, 0]], 1), Err(StatsError::TooFewRaters));
    }
}
