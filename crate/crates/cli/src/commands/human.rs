//! Agreement between automatic scores and human judgments.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use tindex_core::annotations::{
    aggregate_pairwise, aggregate_pointwise, choice_from_scores, disagreement_analysis, method_agreement_by_bucket,
    parse_manifest, parse_pairwise, parse_pointwise, pointwise_correlation, AgreementTable, AnnotationError,
    DisagreementReport, ItemRating, PairJudgment, PairManifestEntry, PairwiseVote,
};
use tindex_core::corpus::load_dataset;
use tindex_core::scoring::{Method, Reference};
use tindex_core::stats::{fleiss_kappa, Choice, Correlation};

use super::{index_scores, load_scores, write_report};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{ConfigHasher, EvalReport, ReportKind};

/// Votes per pair: the given count, or the count on the first pair. The
/// aggregation then checks that every pair has the same number.
fn raters_per_pair(votes: &[PairwiseVote], given: Option<usize>) -> CliResult<usize> {
    if let Some(r) = given {
        return Ok(r);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in votes {
        *counts.entry(&v.pair_id).or_default() += 1;
    }
    counts.values().next().copied().ok_or_else(|| CliError::validation("vote file is empty"))
}

/// Fleiss' kappa over the A/B votes; `None` when undefined.
fn vote_kappa(votes: &[PairwiseVote], raters: usize) -> Option<f64> {
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for v in votes {
        let row = counts.entry(&v.pair_id).or_insert_with(|| vec![0, 0]);
        row[usize::from(v.choice == Choice::B)] += 1;
    }
    let rows: Vec<Vec<u64>> = counts.into_values().collect();
    fleiss_kappa(&rows, raters as u64).ok()
}

fn judged_pairs<'a>(
    manifest: &'a [PairManifestEntry],
    judgments: &[PairJudgment],
) -> CliResult<HashMap<&'a str, &'a PairManifestEntry>> {
    let by_id: HashMap<&str, &PairManifestEntry> = manifest.iter().map(|m| (m.pair_id.as_str(), m)).collect();
    for j in judgments {
        if !by_id.contains_key(j.pair_id.as_str()) {
            return Err(AnnotationError::MissingPair(j.pair_id.clone()).into());
        }
    }
    Ok(by_id)
}

#[derive(Debug, Clone, Args)]
pub struct PairwiseArgs {
    /// Score JSONL over the translations named in the manifest; every
    /// method in the file is evaluated.
    #[arg(long)]
    pub scores: PathBuf,
    /// Pair manifest JSONL.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Pairwise vote JSONL.
    #[arg(long)]
    pub votes: PathBuf,
    /// Votes per pair; inferred from the vote file when absent.
    #[arg(long)]
    pub raters: Option<usize>,
    /// Model behind single-model scores, which fixes their sign.
    #[arg(long, default_value = "high")]
    pub reference: Reference,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Table-3-shaped agreement with the human majority, per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEvalPayload {
    pub raters: usize,
    pub n_pairs: usize,
    /// Fleiss' kappa among the annotators; absent when undefined.
    pub fleiss_kappa: Option<f64>,
    pub rows: Vec<PairwiseRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub method: Method,
    pub table: AgreementTable,
}

/// Agreement tables for the given oriented scores.
pub fn eval_pairwise(
    scores: &[(Method, HashMap<String, f64>)],
    manifest: &[PairManifestEntry],
    votes: &[PairwiseVote],
    raters: usize,
) -> CliResult<PairwiseEvalPayload> {
    let judgments = aggregate_pairwise(votes, raters)?;
    let pairs = judged_pairs(manifest, &judgments)?;
    let mut rows = Vec::with_capacity(scores.len());
    for (method, by_id) in scores {
        let score = |id: &String| by_id.get(id).copied().ok_or_else(|| AnnotationError::MissingScore(id.clone()));
        let mut choices = HashMap::with_capacity(judgments.len());
        for j in &judgments {
            let m = pairs[j.pair_id.as_str()];
            choices.insert(j.pair_id.clone(), choice_from_scores(score(&m.translation_a)?, score(&m.translation_b)?));
        }
        rows.push(PairwiseRow { method: *method, table: method_agreement_by_bucket(&judgments, &choices, raters)? });
    }
    Ok(PairwiseEvalPayload { raters, n_pairs: judgments.len(), fleiss_kappa: vote_kappa(votes, raters), rows })
}

pub fn cmd_eval_pairwise(args: &PairwiseArgs) -> CliResult<EvalReport> {
    let hash = ConfigHasher::new("eval-pairwise")
        .input("scores", &args.scores)?
        .input("manifest", &args.manifest)?
        .input("votes", &args.votes)?
        .flag("raters", format!("{:?}", args.raters))
        .flag("reference", format!("{:?}", args.reference))
        .finish();
    let scores = index_scores(&load_scores(&args.scores)?, args.reference)?;
    let manifest = io::load(&args.manifest, parse_manifest)?;
    let votes = io::load(&args.votes, parse_pairwise)?;
    let raters = raters_per_pair(&votes, args.raters)?;
    let payload = eval_pairwise(&scores, &manifest, &votes, raters)?;
    let report = EvalReport::new(ReportKind::PairwiseEval, hash, &payload)?;
    write_report(&report, args.out.as_deref())?;
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct PointwiseArgs {
    /// Score JSONL keyed by the rated item ids.
    #[arg(long)]
    pub scores: PathBuf,
    /// Pointwise rating JSONL (0 to 5).
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long, default_value = "high")]
    pub reference: Reference,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseEvalPayload {
    pub n_items: usize,
    pub n_ratings: usize,
    pub rows: Vec<PointwiseRow>,
    pub items: Vec<ItemRating>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRow {
    pub method: Method,
    pub correlation: Correlation,
}

pub fn cmd_eval_pointwise(args: &PointwiseArgs) -> CliResult<EvalReport> {
    let hash = ConfigHasher::new("eval-pointwise")
        .input("scores", &args.scores)?
        .input("ratings", &args.ratings)?
        .flag("reference", format!("{:?}", args.reference))
        .finish();
    let scores = index_scores(&load_scores(&args.scores)?, args.reference)?;
    let ratings = io::load(&args.ratings, parse_pointwise)?;
    let items = aggregate_pointwise(&ratings);
    let rows = scores
        .iter()
        .map(|(method, by_id)| Ok(PointwiseRow { method: *method, correlation: pointwise_correlation(by_id, &items)? }))
        .collect::<CliResult<Vec<_>>>()?;
    let payload = PointwiseEvalPayload { n_items: items.len(), n_ratings: ratings.len(), rows, items };
    let report = EvalReport::new(ReportKind::PointwiseEval, hash, &payload)?;
    write_report(&report, args.out.as_deref())?;
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct DisagreementArgs {
    /// T-index score JSONL over the manifest's translations.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub votes: PathBuf,
    /// Dataset holding the translation texts.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub raters: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementPayload {
    pub raters: usize,
    #[serde(flatten)]
    pub analysis: DisagreementReport,
}

pub fn cmd_disagreement(args: &DisagreementArgs) -> CliResult<EvalReport> {
    let hash = ConfigHasher::new("disagreement")
        .input("scores", &args.scores)?
        .input("manifest", &args.manifest)?
        .input("votes", &args.votes)?
        .input("dataset", &args.dataset)?
        .flag("raters", format!("{:?}", args.raters))
        .finish();
    let scores = index_scores(&load_scores(&args.scores)?, Reference::High)?;
    let tindex = scores
        .into_iter()
        .find(|(m, _)| *m == Method::Tindex)
        .map(|(_, s)| s)
        .ok_or_else(|| CliError::validation(format!("{} has no tindex scores", args.scores.display())))?;
    let manifest = io::load(&args.manifest, parse_manifest)?;
    let votes = io::load(&args.votes, parse_pairwise)?;
    let ds = load_dataset(&args.dataset).map_err(|e| CliError::from(e).in_file(&args.dataset))?;
    let texts: HashMap<String, String> = ds.translations().iter().map(|t| (t.id.clone(), t.text.clone())).collect();
    let raters = raters_per_pair(&votes, args.raters)?;
    let judgments = aggregate_pairwise(&votes, raters)?;
    let analysis = disagreement_analysis(&manifest, &texts, &tindex, &judgments, raters)?;
    let report = EvalReport::new(ReportKind::Disagreement, hash, &DisagreementPayload { raters, analysis })?;
    write_report(&report, args.out.as_deref())?;
    Ok(report)
}
