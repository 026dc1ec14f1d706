//! Correlation of T-index scores with external quality-estimation metrics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use tindex_core::features::{tokenize, TokenizeMode};
use tindex_core::scoring::{Method, Reference};
use tindex_core::stats::{pearson, sentence_bleu, Correlation};

use super::{index_scores, load_scores, path_list, write_report};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{ConfigHasher, EvalReport, ReportKind};

/// How the evaluated translation relates to the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QeCondition {
    Standard,
    Reverse,
    BackTranslate,
}

impl QeCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            QeCondition::Standard => "standard",
            QeCondition::Reverse => "reverse",
            QeCondition::BackTranslate => "back_translate",
        }
    }
}

impl fmt::Display for QeCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QeCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(QeCondition::Standard),
            "reverse" => Ok(QeCondition::Reverse),
            "back_translate" => Ok(QeCondition::BackTranslate),
            other => Err(format!("condition must be standard, reverse or back_translate, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeScoreRecord {
    pub sample_id: String,
    pub system_id: String,
    pub metric_name: String,
    pub value: f64,
    pub condition: QeCondition,
}

#[derive(Debug, Clone, Args)]
pub struct QeArgs {
    /// Score JSONL holding the T-index of every evaluated translation.
    #[arg(long)]
    pub scores: PathBuf,
    /// QE score JSONL; repeat for several files.
    #[arg(long = "qe", required = true)]
    pub qe_files: Vec<PathBuf>,
    /// Score method to correlate against the metrics.
    #[arg(long, default_value = "tindex")]
    pub method: Method,
    #[arg(long, default_value = "high")]
    pub reference: Reference,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Figure-4-shaped layout: one cell per (metric, condition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeCorrelationPayload {
    pub method: Method,
    pub cells: Vec<QeCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QeCell {
    pub metric: String,
    pub condition: QeCondition,
    pub n: usize,
    /// Absent when the correlation is undefined; `error` says why.
    pub correlation: Option<Correlation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// (score, metric) per translation, ordered by (system, sample).
    pub points: Vec<[f64; 2]>,
}

pub fn qe_correlate(
    method: Method,
    scores: &HashMap<String, f64>,
    records: &[QeScoreRecord],
) -> CliResult<QeCorrelationPayload> {
    type Key<'a> = (&'a str, QeCondition);
    let mut cells: BTreeMap<Key, BTreeMap<(&str, &str), [f64; 2]>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert((&r.metric_name, r.condition, &r.system_id, &r.sample_id)) {
            return Err(CliError::validation(format!(
                "duplicate {} score for system {:?}, sample {:?}, condition {}",
                r.metric_name, r.system_id, r.sample_id, r.condition
            )));
        }
        if !r.value.is_finite() {
            return Err(CliError::validation(format!(
                "{} score for sample {:?} is not finite",
                r.metric_name, r.sample_id
            )));
        }
        let x = scores.get(&r.sample_id).ok_or_else(|| {
            CliError::validation(format!(
                "misaligned ids: {} score for sample {:?} (system {:?}) has no {method} score",
                r.metric_name, r.sample_id, r.system_id
            ))
        })?;
        cells
            .entry((r.metric_name.as_str(), r.condition))
            .or_default()
            .insert((r.system_id.as_str(), r.sample_id.as_str()), [*x, r.value]);
    }
    let cells = cells
        .into_iter()
        .map(|((metric, condition), entries)| {
            let points: Vec<[f64; 2]> = entries.into_values().collect();
            let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
            let (correlation, error) = match pearson(&xs, &ys) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            QeCell { metric: metric.to_string(), condition, n: points.len(), correlation, error, points }
        })
        .collect();
    Ok(QeCorrelationPayload { method, cells })
}

pub fn cmd_qe_correlate(args: &QeArgs) -> CliResult<EvalReport> {
    let hash = ConfigHasher::new("qe-correlate")
        .input("scores", &args.scores)?
        .inputs("qe", &args.qe_files)?
        .flag("method", args.method)
        .flag("reference", format!("{:?}", args.reference))
        .finish();
    let scores = index_scores(&load_scores(&args.scores)?, args.reference)?;
    let by_id = scores
        .into_iter()
        .find(|(m, _)| *m == args.method)
        .map(|(_, s)| s)
        .ok_or_else(|| CliError::validation(format!("{} has no {} scores", args.scores.display(), args.method)))?;
    let mut records = Vec::new();
    for p in &args.qe_files {
        records.extend(io::read_jsonl::<QeScoreRecord>(p)?);
    }
    let payload = qe_correlate(args.method, &by_id, &records)
        .map_err(|e| CliError { message: format!("{} (files: {})", e.message, path_list(&args.qe_files)), ..e })?;
    let report = EvalReport::new(ReportKind::QeCorrelation, hash, &payload)?;
    write_report(&report, args.out.as_deref())?;
    Ok(report)
}

/// Input line for native BLEU scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuInput {
    pub sample_id: String,
    pub hypothesis: String,
    pub reference: String,
}

#[derive(Debug, Clone, Args)]
pub struct BleuArgs {
    /// JSONL of {sample_id, hypothesis, reference}.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub system: String,
    #[arg(long)]
    pub condition: QeCondition,
    /// Tokenization for n-gram counting; characters suit Chinese text.
    #[arg(long, default_value = "character")]
    pub tokenize: TokenizeMode,
    /// QE score JSONL output, metric name "bleu".
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_qe_bleu(args: &BleuArgs) -> CliResult<usize> {
    let inputs: Vec<BleuInput> = io::read_jsonl(&args.pairs)?;
    let records = inputs
        .iter()
        .map(|p| {
            let hyp = tokenize(&p.hypothesis, args.tokenize);
            let reference = tokenize(&p.reference, args.tokenize);
            let value = sentence_bleu(&hyp, &reference)
                .map_err(|e| CliError::validation(format!("sample {:?}: {e}", p.sample_id)))?;
            Ok(QeScoreRecord {
                sample_id: p.sample_id.clone(),
                system_id: args.system.clone(),
                metric_name: "bleu".into(),
                value,
                condition: args.condition,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    io::write_jsonl(&args.out, &records)?;
    Ok(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tindex_core::rng::XorShift64Star;

    fn rec(id: &str, metric: &str, value: f64, condition: QeCondition) -> QeScoreRecord {
        QeScoreRecord { sample_id: id.into(), system_id: "sys".into(), metric_name: metric.into(), value, condition }
    }

    #[test]
    fn affine_metric_correlates_perfectly() {
        let scores: HashMap<String, f64> = (0..10).map(|i| (format!("s{i}"), (i * i) as f64 * 0.1)).collect();
        let recs: Vec<QeScoreRecord> =
            scores.iter().map(|(k, v)| rec(k, "m", 3.0 * v - 1.0, QeCondition::Standard)).collect();
        let p = qe_correlate(Method::Tindex, &scores, &recs).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert!((p.cells[0].correlation.unwrap().r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_metric_matches_direct_pearson() {
        let mut rng = XorShift64Star::new(5);
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let scores: HashMap<String, f64> = (0..n).map(|i| (format!("s{i:03}"), xs[i])).collect();
        let recs: Vec<QeScoreRecord> =
            (0..n).map(|i| rec(&format!("s{i:03}"), "m", ys[i], QeCondition::Reverse)).collect();
        let r = qe_correlate(Method::Tindex, &scores, &recs).unwrap().cells[0].correlation.unwrap().r;
        // Textbook two-pass formula as the oracle.
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        assert!((r - sxy / (sxx * syy).sqrt()).abs() < 1e-12);
        assert!(r.abs() < 0.2);
    }

    #[test]
    fn three_conditions_and_misalignment() {
        let scores: HashMap<String, f64> = (0..5).map(|i| (format!("s{i}"), i as f64)).collect();
        let mut recs = Vec::new();
        for c in [QeCondition::BackTranslate, QeCondition::Standard, QeCondition::Reverse] {
            for i in 0..5 {
                recs.push(rec(&format!("s{i}"), "m", (i * 7 % 5) as f64, c));
            }
        }
        let p = qe_correlate(Method::Tindex, &scores, &recs).unwrap();
        let order: Vec<QeCondition> = p.cells.iter().map(|c| c.condition).collect();
        assert_eq!(order, [QeCondition::Standard, QeCondition::Reverse, QeCondition::BackTranslate]);
        recs.push(rec("ghost", "m", 1.0, QeCondition::Standard));
        assert!(qe_correlate(Method::Tindex, &scores, &recs).unwrap_err().message.contains("misaligned"));
    }
}
