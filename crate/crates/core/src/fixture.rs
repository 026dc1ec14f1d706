//! Deterministic synthetic dumps with a planted T-index gap.
//!
//! Stands in for the two fine-tuned scoring models when no model is at hand.
//! Generation uses only [`XorShift64Star`], so the same seed gives the same
//! dumps on every platform.
//!
//! Per token position the two models share a base log-probability
//! `s = −(0.1 + 2.9u)`, and each subtracts its own half-normal noise
//! `|N(0, 0.25²)|`. On samples labeled high, the low model additionally
//! loses `gap`, so the high model leads by `gap` per token in expectation.

use crate::backend::{LayerEmbeddings, TokenScores};
use crate::corpus::{Label, LabelRecord};
use crate::rng::XorShift64Star;

pub const LOW_MODEL_ID: &str = "fixture-low";
pub const HIGH_MODEL_ID: &str = "fixture-high";
pub const FIXTURE_DOMAIN: &str = "fixture";
const TOKENIZER: &str = "fixture-tokenizer-v1";
const NOISE_SD: f64 = 0.25;
const LAYERS: usize = 4;
const DIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub low_model: Vec<TokenScores>,
    pub high_model: Vec<TokenScores>,
    pub labels: Vec<LabelRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("planted gap must be finite and non-negative, got {0}")]
pub struct NegativeGap(pub f64);

/// Half the samples (rounded down) are labeled high, in shuffled order.
pub fn make_fixture(seed: u64, n_samples: usize, gap: f64) -> Result<Fixture, NegativeGap> {
    if !(gap >= 0.0) || !gap.is_finite() {
        return Err(NegativeGap(gap));
    }
    let mut rng = XorShift64Star::new(seed);
    let mut labels: Vec<Label> =
        (0..n_samples).map(|i| if i < n_samples / 2 { Label::High } else { Label::Low }).collect();
    rng.shuffle(&mut labels);

    let mut low_model = Vec::with_capacity(n_samples);
    let mut high_model = Vec::with_capacity(n_samples);
    let mut records = Vec::with_capacity(n_samples);
    for (i, &label) in labels.iter().enumerate() {
        let id = format!("fx-{i:05}");
        let n_tokens = 5 + rng.below(20) as usize;
        let mut lp_low = Vec::with_capacity(n_tokens);
        let mut lp_high = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            let shared = -(0.1 + 2.9 * rng.next_f64());
            lp_high.push(shared - (NOISE_SD * rng.next_normal()).abs());
            let penalty = if label.is_high() { gap } else { 0.0 };
            lp_low.push(shared - (NOISE_SD * rng.next_normal()).abs() - penalty);
        }
        low_model.push(model_record(&id, LOW_MODEL_ID, lp_low, label, Label::Low, gap, &mut rng));
        high_model.push(model_record(&id, HIGH_MODEL_ID, lp_high, label, Label::High, gap, &mut rng));
        records.push(LabelRecord { sample_id: id, label, domain: FIXTURE_DOMAIN.to_string() });
    }
    Ok(Fixture { low_model, high_model, labels: records })
}

/// Fills entropies, second moments and embeddings consistent with the
/// dump invariants. Samples of the model's own class get last-layer
/// embeddings nearer the origin, in proportion to `gap`.
fn model_record(
    id: &str,
    model: &str,
    logprobs: Vec<f64>,
    label: Label,
    model_class: Label,
    gap: f64,
    rng: &mut XorShift64Star,
) -> TokenScores {
    let n = logprobs.len();
    let mut entropies = Vec::with_capacity(n);
    let mut moments = Vec::with_capacity(n);
    for _ in 0..n {
        let h = 0.2 + 1.5 * rng.next_f64();
        let var = 0.05 + 0.5 * rng.next_f64();
        entropies.push(h);
        moments.push(h * h + var);
    }
    let offset = if label == model_class { 0.0 } else { gap };
    let mut data = Vec::with_capacity(LAYERS * DIM);
    for layer in 0..LAYERS {
        for d in 0..DIM {
            let base = if d == layer % DIM { 1.0 } else { 0.0 };
            let shift = if layer == LAYERS - 1 { offset } else { 0.0 };
            data.push((base + shift + 0.3 * rng.next_normal()) as f32);
        }
    }
    TokenScores {
        sample_id: id.to_string(),
        model_id: model.to_string(),
        n_tokens: n,
        token_logprobs: logprobs,
        token_entropies: Some(entropies),
        logp_second_moments: Some(moments),
        layer_embeddings: Some(LayerEmbeddings::new(LAYERS, DIM, data)),
        tokenizer_hash: Some(TOKENIZER.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{tindex, Normalization};
    use crate::stats::auroc;

    fn tindex_auroc(f: &Fixture) -> f64 {
        let scores: Vec<f64> = f
            .low_model
            .iter()
            .zip(&f.high_model)
            .map(|(l, h)| tindex(l, h, Normalization::PerToken).unwrap())
            .collect();
        let labels: Vec<bool> = f.labels.iter().map(|l| l.label.is_high()).collect();
        auroc(&scores, &labels).unwrap()
    }

    #[test]
    fn records_are_valid_and_balanced() {
        let f = make_fixture(42, 10, 1.0).unwrap();
        for r in f.low_model.iter().chain(&f.high_model) {
            r.validate().unwrap();
        }
        assert_eq!(f.labels.iter().filter(|l| l.label.is_high()).count(), 5);
        assert_eq!(f.low_model[3].sample_id, f.high_model[3].sample_id);
        assert_eq!(f.low_model[3].n_tokens, f.high_model[3].n_tokens);
    }

    #[test]
    fn deterministic() {
        assert_eq!(make_fixture(7, 30, 0.5).unwrap(), make_fixture(7, 30, 0.5).unwrap());
        assert_ne!(make_fixture(7, 30, 0.5).unwrap(), make_fixture(8, 30, 0.5).unwrap());
    }

    #[test]
    fn planted_gap_separates() {
        assert!(tindex_auroc(&make_fixture(42, 200, 1.0).unwrap()) >= 0.95);
        let null = tindex_auroc(&make_fixture(42, 200, 0.0).unwrap());
        assert!((0.4..=0.6).contains(&null), "{null}");
    }

    #[test]
    fn negative_gap_rejected() {
        assert!(make_fixture(1, 2, -0.1).is_err());
        assert!(make_fixture(1, 2, f64::NAN).is_err());
    }
}
