use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tindex_core::backend::{read_dump, TokenScores};
use tindex_core::corpus::LabelRecord;
use tindex_core::scoring::{
    score_batch, write_scores, EmbeddingFits, Method, Normalization, Reference, ScoreInput, ScoringConfig,
    ScoringError, Shrinkage,
};
use tindex_core::stats::{evaluate_binary, mean, BinaryEvalResult};
use tindex_core::Execution;

use super::{load_labels, write_report};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{ConfigHasher, EvalReport, ReportKind};

/// Column holding every labeled sample when there is more than one domain.
pub const ALL_DOMAINS: &str = "all";

fn load_dump(path: &Path) -> CliResult<Vec<TokenScores>> {
    read_dump(path).map_err(|e| CliError::from(e).in_file(path))
}

fn index_dump<'a>(recs: &'a [TokenScores], path: &Path) -> CliResult<HashMap<&'a str, &'a TokenScores>> {
    let mut m = HashMap::with_capacity(recs.len());
    for r in recs {
        if m.insert(r.sample_id.as_str(), r).is_some() {
            return Err(CliError::validation(format!("{}: sample {:?} appears twice", path.display(), r.sample_id)));
        }
    }
    Ok(m)
}

/// Fits for MD/RMD from the reference model's dump of labeled training
/// samples.
fn load_fits(dump: &Path, labels: &Path, reference: Reference) -> CliResult<EmbeddingFits> {
    let recs = load_dump(dump)?;
    let labels = load_labels(labels)?;
    let by_id: HashMap<&str, bool> = labels.iter().map(|l| (l.sample_id.as_str(), l.label.is_high())).collect();
    let samples = recs
        .iter()
        .map(|r| {
            by_id
                .get(r.sample_id.as_str())
                .map(|&h| (r, h))
                .ok_or_else(|| CliError::validation(format!("fit sample {:?} has no label", r.sample_id)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(EmbeddingFits::from_training(&samples, reference, Shrinkage::default())?)
}

#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    /// per_token or sum.
    #[arg(long, default_value = "per_token")]
    pub normalization: Normalization,
    /// Model that supplies single-model baselines: low or high.
    #[arg(long, default_value = "high")]
    pub reference: Reference,
    /// Reference-model dump of training samples, for md and rmd. Repeat once
    /// per run when evaluating several runs.
    #[arg(long = "fit-dump")]
    pub fit_dumps: Vec<PathBuf>,
    /// Labels for the fit dump samples.
    #[arg(long)]
    pub fit_labels: Option<PathBuf>,
}

impl ScoringArgs {
    fn hash(&self, h: ConfigHasher) -> CliResult<ConfigHasher> {
        let mut h = h
            .flag("normalization", self.normalization.as_str())
            .flag("reference", format!("{:?}", self.reference))
            .inputs("fit_dump", &self.fit_dumps)?;
        if let Some(p) = &self.fit_labels {
            h = h.input("fit_labels", p)?;
        }
        Ok(h)
    }

    /// One config per run. Without fit dumps every run gets no fits.
    fn configs(&self, runs: usize) -> CliResult<Vec<ScoringConfig>> {
        let base = ScoringConfig { normalization: self.normalization, reference: self.reference, fits: None };
        if self.fit_dumps.is_empty() {
            return Ok(vec![base; runs]);
        }
        if self.fit_dumps.len() != runs {
            return Err(CliError::validation(format!(
                "{} fit dumps for {runs} runs; give one per run",
                self.fit_dumps.len()
            )));
        }
        let labels = self.fit_labels.as_ref().ok_or_else(|| CliError::validation("--fit-dump needs --fit-labels"))?;
        self.fit_dumps
            .iter()
            .map(|d| Ok(ScoringConfig { fits: Some(load_fits(d, labels, self.reference)?), ..base.clone() }))
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Dump from the low-translationese (idiomatic) model.
    #[arg(long)]
    pub low_dump: Option<PathBuf>,
    /// Dump from the high-translationese (literal) model.
    #[arg(long)]
    pub high_dump: Option<PathBuf>,
    #[arg(long, default_value = "tindex")]
    pub method: Method,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Score JSONL output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreSummary {
    pub written: usize,
    /// Samples with an undefined score, left out of the output.
    pub undefined: usize,
}

/// Scores every sample of the reference dump (both dumps for tindex), in
/// dump order. Undefined scores are dropped and counted.
pub fn cmd_score(args: &ScoreArgs) -> CliResult<ScoreSummary> {
    let low = args.low_dump.as_deref().map(load_dump).transpose()?;
    let high = args.high_dump.as_deref().map(load_dump).transpose()?;
    let reference_dump = match args.scoring.reference {
        Reference::Low => &low,
        Reference::High => &high,
    };
    let cfg = args.scoring.configs(1)?.remove(0);
    let inputs: Vec<ScoreInput> = match (&low, &high) {
        (Some(l), Some(h)) => {
            let lp = args.low_dump.as_deref().expect("low dump given");
            let li = index_dump(l, lp)?;
            h.iter()
                .map(|hs| {
                    li.get(hs.sample_id.as_str()).map(|ls| ScoreInput::Pair { low: ls, high: hs }).ok_or_else(|| {
                        CliError::validation(format!("sample {:?} missing from the low dump", hs.sample_id))
                    })
                })
                .collect::<CliResult<_>>()?
        }
        _ if args.method.needs_pair() => {
            return Err(CliError::validation("tindex needs both --low-dump and --high-dump"));
        }
        _ => match reference_dump {
            Some(d) => d.iter().map(ScoreInput::Single).collect(),
            None => {
                return Err(CliError::validation(format!(
                    "{} with reference {:?} needs that model's dump",
                    args.method, args.scoring.reference
                )))
            }
        },
    };
    let mut out = Vec::with_capacity(inputs.len());
    let mut undefined = 0;
    for r in score_batch(Execution::default(), args.method, &cfg, &inputs) {
        match r {
            Ok(rec) => out.push(rec),
            Err(ScoringError::UndefinedScore { .. }) => undefined += 1,
            Err(e) => return Err(e.into()),
        }
    }
    io::write_with(&args.out, |w| write_scores(&out, w))?;
    Ok(ScoreSummary { written: out.len(), undefined })
}

#[derive(Debug, Clone, Args)]
pub struct EvalBinaryArgs {
    /// Low-model dump of the test samples. Repeat together with
    /// --high-dump to average over several training runs.
    #[arg(long = "low-dump", required = true)]
    pub low_dumps: Vec<PathBuf>,
    #[arg(long = "high-dump", required = true)]
    pub high_dumps: Vec<PathBuf>,
    /// Ground-truth labels; the domain field selects report columns.
    #[arg(long)]
    pub labels: PathBuf,
    /// Methods to evaluate, comma-separated.
    #[arg(long = "method", value_delimiter = ',', default_value = "tindex")]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Report JSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Table-2-shaped binary evaluation: methods as rows, test domains as
/// columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvalPayload {
    pub normalization: Normalization,
    pub reference: Reference,
    pub runs: usize,
    pub domains: Vec<String>,
    pub rows: Vec<BinaryEvalRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvalRow {
    pub method: Method,
    pub label: String,
    pub cells: Vec<BinaryEvalCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryEvalCell {
    pub domain: String,
    /// Means over runs.
    pub accuracy: f64,
    pub auroc: f64,
    pub runs: Vec<BinaryEvalResult>,
}

impl BinaryEvalPayload {
    pub fn cell(&self, method: Method, domain: &str) -> Option<&BinaryEvalCell> {
        self.rows.iter().find(|r| r.method == method).and_then(|r| r.cells.iter().find(|c| c.domain == domain))
    }
}

/// Model outputs of one training run on the test samples.
pub struct Run<'a> {
    pub low: &'a [TokenScores],
    pub high: &'a [TokenScores],
}

/// Oriented scores for every label, in label order; `None` where the score
/// is undefined.
fn run_scores(
    method: Method,
    cfg: &ScoringConfig,
    run: &Run<'_>,
    labels: &[LabelRecord],
) -> CliResult<Vec<Option<f64>>> {
    let li = index_dump(run.low, Path::new("low dump"))?;
    let hi = index_dump(run.high, Path::new("high dump"))?;
    let inputs = labels
        .iter()
        .map(|l| {
            let id = l.sample_id.as_str();
            match (li.get(id), hi.get(id)) {
                (Some(low), Some(high)) => Ok(ScoreInput::Pair { low, high }),
                _ => Err(CliError::validation(format!("labeled sample {id:?} is missing from a dump"))),
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    let sign = method.orientation(cfg.reference);
    score_batch(Execution::default(), method, cfg, &inputs)
        .into_iter()
        .map(|r| match r {
            Ok(rec) => Ok(Some(sign * rec.value)),
            Err(ScoringError::UndefinedScore { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        })
        .collect()
}

pub fn eval_binary(
    runs: &[Run<'_>],
    configs: &[ScoringConfig],
    labels: &[LabelRecord],
    methods: &[Method],
) -> CliResult<BinaryEvalPayload> {
    assert_eq!(runs.len(), configs.len(), "one scoring config per run");
    if runs.is_empty() {
        return Err(CliError::validation("no dump runs given"));
    }
    if methods.is_empty() {
        return Err(CliError::validation("no methods given"));
    }
    let mut domains: Vec<String> =
        labels.iter().map(|l| l.domain.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if domains.len() > 1 {
        domains.push(ALL_DOMAINS.to_string());
    }
    let truth: Vec<bool> = labels.iter().map(|l| l.label.is_high()).collect();
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let scores = runs
            .iter()
            .zip(configs)
            .map(|(run, cfg)| run_scores(method, cfg, run, labels))
            .collect::<CliResult<Vec<_>>>()?;
        let mut cells = Vec::with_capacity(domains.len());
        for d in &domains {
            let keep: Vec<usize> = (0..labels.len()).filter(|&i| d == ALL_DOMAINS || labels[i].domain == *d).collect();
            let y: Vec<bool> = keep.iter().map(|&i| truth[i]).collect();
            let results = scores
                .iter()
                .map(|s| {
                    let x: Vec<Option<f64>> = keep.iter().map(|&i| s[i]).collect();
                    evaluate_binary(&x, &y).map_err(|e| CliError::validation(format!("{method} on {d}: {e}")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            cells.push(BinaryEvalCell {
                domain: d.clone(),
                accuracy: mean(&results.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
                auroc: mean(&results.iter().map(|r| r.auroc).collect::<Vec<_>>()),
                runs: results,
            });
        }
        rows.push(BinaryEvalRow { method, label: method.label().to_string(), cells });
    }
    Ok(BinaryEvalPayload {
        normalization: configs[0].normalization,
        reference: configs[0].reference,
        runs: runs.len(),
        domains,
        rows,
    })
}

pub fn cmd_eval_binary(args: &EvalBinaryArgs) -> CliResult<EvalReport> {
    if args.low_dumps.len() != args.high_dumps.len() {
        return Err(CliError::validation("give the same number of --low-dump and --high-dump files"));
    }
    let hash = ConfigHasher::new("eval-binary")
        .inputs("low_dump", &args.low_dumps)?
        .inputs("high_dump", &args.high_dumps)?
        .input("labels", &args.labels)?
        .flag("methods", args.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","));
    let hash = args.scoring.hash(hash)?.finish();
    let labels = load_labels(&args.labels)?;
    let lows = args.low_dumps.iter().map(|p| load_dump(p)).collect::<CliResult<Vec<_>>>()?;
    let highs = args.high_dumps.iter().map(|p| load_dump(p)).collect::<CliResult<Vec<_>>>()?;
    let runs: Vec<Run> = lows.iter().zip(&highs).map(|(l, h)| Run { low: l, high: h }).collect();
    let configs = args.scoring.configs(runs.len())?;
    let payload = eval_binary(&runs, &configs, &labels, &args.methods)?;
    EvalReport::new(ReportKind::BinaryEval, hash, &payload)
}

/// Runs [`cmd_eval_binary`] and writes the report.
pub fn run_eval_binary(args: &EvalBinaryArgs) -> CliResult<EvalReport> {
    let r = cmd_eval_binary(args)?;
    write_report(&r, args.out.as_deref())?;
    Ok(r)
}
