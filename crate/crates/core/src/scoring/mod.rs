//! Sample-level scoring: the T-index and the unsupervised baselines.

mod embedding;
mod likelihood;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use embedding::{
    fit_gaussian, mahalanobis, relative_mahalanobis, sample_covariance, trajectory_volatility, GaussianFit, Shrinkage,
};
pub use likelihood::{delta_tindex, entropy_score, fast_detect_gpt, log_likelihood, tindex};

use crate::backend::TokenScores;
use crate::error::ErrorClass;
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tindex,
    Loglik,
    Entropy,
    Fdg,
    Md,
    Rmd,
    Tv,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Tindex, Method::Loglik, Method::Entropy, Method::Fdg, Method::Md, Method::Rmd, Method::Tv];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tindex => "tindex",
            Method::Loglik => "loglik",
            Method::Entropy => "entropy",
            Method::Fdg => "fdg",
            Method::Md => "md",
            Method::Rmd => "rmd",
            Method::Tv => "tv",
        }
    }

    /// Display name as it appears in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Tindex => "Translationese Index",
            Method::Loglik => "Log-likelihood",
            Method::Entropy => "Entropy",
            Method::Fdg => "Fast-DetectGPT",
            Method::Md => "Mahalanobis Distance",
            Method::Rmd => "Relative Mahalanobis Distance",
            Method::Tv => "Trajectory Volatility",
        }
    }

    pub fn needs_pair(self) -> bool {
        self == Method::Tindex
    }

    pub fn needs_fits(self) -> bool {
        matches!(self, Method::Md | Method::Rmd)
    }

    /// Sign that turns a raw score into one where larger means more
    /// translationese, given which model produced it. Single-model scores
    /// measure how in-distribution a sample is for the scoring model, so
    /// the sign flips with the model.
    pub fn orientation(self, reference: Reference) -> f64 {
        let toward_in_dist = match self {
            Method::Tindex => return 1.0,
            Method::Loglik | Method::Fdg | Method::Tv => 1.0,
            Method::Entropy | Method::Md | Method::Rmd => -1.0,
        };
        match reference {
            Reference::High => toward_in_dist,
            Reference::Low => -toward_in_dist,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected one of tindex, loglik, entropy, fdg, md, rmd, tv)"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    PerToken,
    Sum,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::PerToken => "per_token",
            Normalization::Sum => "sum",
        }
    }
}

impl FromStr for Normalization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per_token" => Ok(Normalization::PerToken),
            "sum" => Ok(Normalization::Sum),
            other => Err(format!("normalization must be per_token or sum, got {other:?}")),
        }
    }
}

/// Which of the two scoring models supplies single-model baselines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    Low,
    #[default]
    High,
}

impl FromStr for Reference {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Reference::Low),
            "high" => Ok(Reference::High),
            other => Err(format!("reference model must be low or high, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("sample id mismatch: low model has {low:?}, high model has {high:?}")]
    SampleMismatch { low: String, high: String },
    #[error("sample {sample_id:?}: token count differs between models ({low} vs {high})")]
    TokenCountMismatch { sample_id: String, low: usize, high: usize },
    #[error("sample {sample_id:?}: tokenizer hashes differ between models")]
    TokenizerMismatch { sample_id: String },
    #[error("sample {sample_id:?}: method {method} needs {field}, which the dump does not carry")]
    Capability { sample_id: String, method: &'static str, field: &'static str },
    #[error("sample {sample_id:?}: score undefined: {reason}")]
    UndefinedScore { sample_id: String, reason: &'static str },
    #[error("method {0} needs a low/high model pair")]
    NeedsPair(Method),
    #[error("method {0} needs Gaussian fits from training embeddings")]
    MissingFits(Method),
    #[error("need at least 2 vectors to fit, got {0}")]
    TooFewVectors(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("trajectory volatility needs at least 2 layer rows, got {0}")]
    TooFewLayers(usize),
    #[error("layer {layer} embedding has zero norm")]
    ZeroNormRow { layer: usize },
    #[error("score is not finite")]
    NonFinite,
}

impl ScoringError {
    fn missing(ts: &TokenScores, method: &'static str, field: &'static str) -> Self {
        ScoringError::Capability { sample_id: ts.sample_id.clone(), method, field }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            ScoringError::Capability { .. } | ScoringError::MissingFits(_) | ScoringError::NeedsPair(_) => {
                ErrorClass::Capability
            }
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sample_id: String,
    pub method: Method,
    pub model_ids: Vec<String>,
    pub value: f64,
    pub normalization: Normalization,
}

/// Model outputs for one sample: both models, or one.
#[derive(Debug, Clone, Copy)]
pub enum ScoreInput<'a> {
    Pair { low: &'a TokenScores, high: &'a TokenScores },
    Single(&'a TokenScores),
}

impl<'a> ScoreInput<'a> {
    pub fn sample_id(&self) -> &'a str {
        match self {
            ScoreInput::Pair { high, .. } => &high.sample_id,
            ScoreInput::Single(ts) => &ts.sample_id,
        }
    }
}

/// In-distribution and background fits for MD and RMD, over the last-layer
/// embeddings of the reference model.
#[derive(Debug, Clone)]
pub struct EmbeddingFits {
    pub in_dist: GaussianFit,
    pub background: GaussianFit,
}

impl EmbeddingFits {
    /// Fits from training samples of the reference model. The in-distribution
    /// fit uses samples whose label matches the reference model's class
    /// (`is_high == true` for the high model); the background uses all of them.
    pub fn from_training(
        samples: &[(&TokenScores, bool)],
        reference: Reference,
        shrinkage: Shrinkage,
    ) -> Result<Self, ScoringError> {
        let mut all = Vec::with_capacity(samples.len());
        let mut own = Vec::new();
        for (ts, is_high) in samples {
            let emb =
                ts.layer_embeddings.as_ref().ok_or_else(|| ScoringError::missing(ts, "md", "layer_embeddings"))?;
            let v: Vec<f64> = emb.last_row().iter().map(|&x| f64::from(x)).collect();
            if *is_high == (reference == Reference::High) {
                own.push(v.clone());
            }
            all.push(v);
        }
        Ok(Self { in_dist: fit_gaussian(&own, shrinkage)?, background: fit_gaussian(&all, shrinkage)? })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScoringConfig {
    pub normalization: Normalization,
    pub reference: Reference,
    pub fits: Option<EmbeddingFits>,
}

fn last_layer(ts: &TokenScores, method: &'static str) -> Result<Vec<f64>, ScoringError> {
    let emb = ts.layer_embeddings.as_ref().ok_or_else(|| ScoringError::missing(ts, method, "layer_embeddings"))?;
    Ok(emb.last_row().iter().map(|&x| f64::from(x)).collect())
}

/// Raw (unoriented) score of one sample.
pub fn score_one(method: Method, cfg: &ScoringConfig, input: ScoreInput<'_>) -> Result<ScoreRecord, ScoringError> {
    let (value, model_ids) = match (method, input) {
        (Method::Tindex, ScoreInput::Pair { low, high }) => {
            (tindex(low, high, cfg.normalization)?, vec![low.model_id.clone(), high.model_id.clone()])
        }
        (Method::Tindex, ScoreInput::Single(_)) => return Err(ScoringError::NeedsPair(method)),
        (_, input) => {
            let ts = match input {
                ScoreInput::Pair { low, high } => match cfg.reference {
                    Reference::Low => low,
                    Reference::High => high,
                },
                ScoreInput::Single(ts) => ts,
            };
            let v = match method {
                Method::Loglik => likelihood::log_likelihood_with(ts, cfg.normalization),
                Method::Entropy => likelihood::entropy_with(ts, cfg.normalization)?,
                Method::Fdg => fast_detect_gpt(ts)?,
                Method::Md => {
                    let fits = cfg.fits.as_ref().ok_or(ScoringError::MissingFits(method))?;
                    mahalanobis(&fits.in_dist, &last_layer(ts, "md")?)?
                }
                Method::Rmd => {
                    let fits = cfg.fits.as_ref().ok_or(ScoringError::MissingFits(method))?;
                    relative_mahalanobis(&fits.in_dist, &fits.background, &last_layer(ts, "rmd")?)?
                }
                Method::Tv => {
                    let emb = ts
                        .layer_embeddings
                        .as_ref()
                        .ok_or_else(|| ScoringError::missing(ts, "tv", "layer_embeddings"))?;
                    trajectory_volatility(emb)?
                }
                Method::Tindex => unreachable!("handled above"),
            };
            (v, vec![ts.model_id.clone()])
        }
    };
    if !value.is_finite() {
        return Err(ScoringError::NonFinite);
    }
    Ok(ScoreRecord {
        sample_id: input.sample_id().to_string(),
        method,
        model_ids,
        value,
        normalization: cfg.normalization,
    })
}

/// Scores every input, in input order. Per-sample failures are returned in
/// place rather than aborting the batch.
pub fn score_batch(
    exec: Execution,
    method: Method,
    cfg: &ScoringConfig,
    inputs: &[ScoreInput<'_>],
) -> Vec<Result<ScoreRecord, ScoringError>> {
    exec::map(exec, inputs, |inp| score_one(method, cfg, *inp))
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScoreFileError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ScoreFileError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

pub fn parse_scores<R: BufRead>(reader: R) -> Result<Vec<ScoreRecord>, ScoreFileError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord = serde_json::from_str(&line)
            .map_err(|e| ScoreFileError::Malformed { line: i + 1, message: e.to_string() })?;
        let want = if rec.method.needs_pair() { 2 } else { 1 };
        if rec.model_ids.len() != want {
            return Err(ScoreFileError::Malformed {
                line: i + 1,
                message: format!("method {} needs {want} model id(s), got {}", rec.method, rec.model_ids.len()),
            });
        }
        if !rec.value.is_finite() {
            return Err(ScoreFileError::Malformed { line: i + 1, message: "value is not finite".into() });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_scores<W: Write>(records: &[ScoreRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
