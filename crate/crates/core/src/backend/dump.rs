//! Score-dump records: per-sample model outputs, one JSON object per line.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ErrorClass;

/// Slack allowed when checking E[(log p)²] ≥ H² on values that were
/// rounded independently.
const MOMENT_REL_TOL: f64 = 1e-9;

/// Mean-pooled hidden state per layer, row-major `layers × dim`, 32-bit.
/// Row 0 is the input embedding layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEmbeddings {
    pub layers: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl LayerEmbeddings {
    pub fn new(layers: usize, dim: usize, data: Vec<f32>) -> Self {
        Self { layers, dim, data }
    }

    pub fn row(&self, layer: usize) -> &[f32] {
        &self.data[layer * self.dim..(layer + 1) * self.dim]
    }

    pub fn last_row(&self) -> &[f32] {
        self.row(self.layers - 1)
    }
}

/// Model outputs for one (source, translation) sample under one model.
/// Log-probabilities are natural log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScores {
    pub sample_id: String,
    pub model_id: String,
    pub n_tokens: usize,
    pub token_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_entropies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logp_second_moments: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_embeddings: Option<LayerEmbeddings>,
    /// Fingerprint of the tokenizer that produced the tokens, when known.
    /// Two dumps of the same sample must agree on it to be compared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer_hash: Option<String>,
}

impl TokenScores {
    /// A record with logprobs only.
    pub fn from_logprobs(sample_id: impl Into<String>, model_id: impl Into<String>, logprobs: Vec<f64>) -> Self {
        Self {
            sample_id: sample_id.into(),
            model_id: model_id.into(),
            n_tokens: logprobs.len(),
            token_logprobs: logprobs,
            token_entropies: None,
            logp_second_moments: None,
            layer_embeddings: None,
            tokenizer_hash: None,
        }
    }

    pub fn validate(&self) -> Result<(), Violation> {
        if self.n_tokens == 0 {
            return Err(Violation::NoTokens);
        }
        let check_len = |field: &'static str, len: usize| {
            if len == self.n_tokens {
                Ok(())
            } else {
                Err(Violation::Length { field, expected: self.n_tokens, got: len })
            }
        };
        check_len("token_logprobs", self.token_logprobs.len())?;
        for (i, &v) in self.token_logprobs.iter().enumerate() {
            if !v.is_finite() {
                return Err(Violation::NonFinite { field: "token_logprobs", index: i });
            }
            if v > 0.0 {
                return Err(Violation::PositiveLogprob { index: i, value: v });
            }
        }
        if let Some(h) = &self.token_entropies {
            check_len("token_entropies", h.len())?;
            for (i, &v) in h.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Violation::NonFinite { field: "token_entropies", index: i });
                }
                if v < 0.0 {
                    return Err(Violation::NegativeEntropy { index: i, value: v });
                }
            }
        }
        if let Some(m2) = &self.logp_second_moments {
            check_len("logp_second_moments", m2.len())?;
            for (i, &v) in m2.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Violation::NonFinite { field: "logp_second_moments", index: i });
                }
                if v < 0.0 {
                    return Err(Violation::MomentBelowEntropySquare { index: i, moment: v, entropy: 0.0 });
                }
            }
            if let Some(h) = &self.token_entropies {
                for (i, (&m, &e)) in m2.iter().zip(h).enumerate() {
                    let sq = e * e;
                    if m < sq - MOMENT_REL_TOL * sq.max(1.0) {
                        return Err(Violation::MomentBelowEntropySquare { index: i, moment: m, entropy: e });
                    }
                }
            }
        }
        if let Some(emb) = &self.layer_embeddings {
            if emb.layers == 0 || emb.dim == 0 || emb.data.len() != emb.layers * emb.dim {
                return Err(Violation::EmbeddingShape { layers: emb.layers, dim: emb.dim, len: emb.data.len() });
            }
            if let Some(i) = emb.data.iter().position(|v| !v.is_finite()) {
                return Err(Violation::NonFinite { field: "layer_embeddings.data", index: i });
            }
        }
        Ok(())
    }
}

/// A broken [`TokenScores`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoTokens,
    Length { field: &'static str, expected: usize, got: usize },
    NonFinite { field: &'static str, index: usize },
    PositiveLogprob { index: usize, value: f64 },
    NegativeEntropy { index: usize, value: f64 },
    MomentBelowEntropySquare { index: usize, moment: f64, entropy: f64 },
    EmbeddingShape { layers: usize, dim: usize, len: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTokens => write!(f, "n_tokens must be at least 1"),
            Violation::Length { field, expected, got } => {
                write!(f, "{field} has length {got}, expected n_tokens = {expected}")
            }
            Violation::NonFinite { field, index } => write!(f, "{field}[{index}] is not finite"),
            Violation::PositiveLogprob { index, value } => {
                write!(f, "token_logprobs[{index}] = {value} is positive")
            }
            Violation::NegativeEntropy { index, value } => {
                write!(f, "token_entropies[{index}] = {value} is negative")
            }
            Violation::MomentBelowEntropySquare { index, moment, entropy } => write!(
                f,
                "logp_second_moments[{index}] = {moment} is below token_entropies[{index}]^2 = {}",
                entropy * entropy
            ),
            Violation::EmbeddingShape { layers, dim, len } => {
                write!(f, "layer_embeddings has {len} values, expected layers ({layers}) x dim ({dim}), both non-zero")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line} (sample {sample_id:?}): {violation}")]
    Invalid { line: usize, sample_id: String, violation: Violation },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DumpError {
    pub fn class(&self) -> ErrorClass {
        match self {
            DumpError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

pub fn parse_dump<R: BufRead>(reader: R) -> Result<Vec<TokenScores>, DumpError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TokenScores =
            serde_json::from_str(&line).map_err(|e| DumpError::Malformed { line: line_no, message: e.to_string() })?;
        rec.validate().map_err(|violation| DumpError::Invalid {
            line: line_no,
            sample_id: rec.sample_id.clone(),
            violation,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_dump(path: &Path) -> Result<Vec<TokenScores>, DumpError> {
    let f = std::fs::File::open(path)?;
    parse_dump(BufReader::new(f))
}

/// One record per line, fields in declaration order, absent optionals omitted.
pub fn write_dump_to<W: Write>(records: &[TokenScores], mut w: W) -> Result<(), DumpError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_dump(records: &[TokenScores], path: &Path) -> Result<(), DumpError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_dump_to(records, &mut w)?;
    w.flush()?;
    Ok(())
}
