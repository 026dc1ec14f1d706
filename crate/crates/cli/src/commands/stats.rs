use std::path::PathBuf;

use clap::Args;
use tindex_core::corpus::{load_dataset, Condition};
use tindex_core::features::{corpus_compare, Lexicons, TokenizeMode};
use tindex_core::Execution;

use super::write_report;
use crate::error::{CliError, CliResult};
use crate::report::{ConfigHasher, EvalReport, ReportKind};

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Dataset whose low and high translations are compared; wild
    /// translations are ignored.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory with the four lexicon files; the bundled lists when absent.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// character, whitespace or pretokenized.
    #[arg(long, default_value = "character")]
    pub tokenize: TokenizeMode,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Table-1-shaped surface features of the low and high corpora.
pub fn cmd_stats_corpus(args: &CorpusArgs) -> CliResult<EvalReport> {
    let lex = match &args.lexicon {
        Some(dir) => Lexicons::load_dir(dir)?,
        None => Lexicons::bundled(),
    };
    let hash = ConfigHasher::new("stats corpus")
        .input("dataset", &args.dataset)?
        .flag("lexicon", &lex.fingerprint)
        .flag("tokenize", format!("{:?}", args.tokenize))
        .finish();
    let ds = load_dataset(&args.dataset).map_err(|e| CliError::from(e).in_file(&args.dataset))?;
    let texts = |c: Condition| -> Vec<&str> {
        ds.translations().iter().filter(|t| t.condition == c).map(|t| t.text.as_str()).collect()
    };
    let table =
        corpus_compare(Execution::default(), &texts(Condition::Low), &texts(Condition::High), &lex, args.tokenize)?;
    let report = EvalReport::new(ReportKind::CorpusStats, hash, &table)?;
    write_report(&report, args.out.as_deref())?;
    Ok(report)
}
