use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use tindex_core::backend::{read_dump, write_dump_to};
use tindex_core::corpus::write_labels;
use tindex_core::fixture::make_fixture;

use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dump: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpSummary {
    pub records: usize,
    pub models: BTreeSet<String>,
    pub with_entropies: usize,
    pub with_embeddings: usize,
}

/// Reads and validates every record; the first violation fails the run.
pub fn cmd_dump_validate(args: &ValidateArgs) -> CliResult<DumpSummary> {
    let recs = read_dump(&args.dump).map_err(|e| CliError::from(e).in_file(&args.dump))?;
    let mut seen = BTreeSet::new();
    for r in &recs {
        if !seen.insert((&r.model_id, &r.sample_id)) {
            return Err(CliError::validation(format!(
                "{}: sample {:?} appears twice for model {:?}",
                args.dump.display(),
                r.sample_id,
                r.model_id
            )));
        }
    }
    Ok(DumpSummary {
        records: recs.len(),
        models: recs.iter().map(|r| r.model_id.clone()).collect(),
        with_entropies: recs.iter().filter(|r| r.token_entropies.is_some()).count(),
        with_embeddings: recs.iter().filter(|r| r.layer_embeddings.is_some()).count(),
    })
}

#[derive(Debug, Clone, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of samples.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Planted per-token log-likelihood gap on high-labeled samples.
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
    /// Output directory; receives low.jsonl, high.jsonl and labels.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_dump_fixture(args: &FixtureArgs) -> CliResult<()> {
    let fx = make_fixture(args.seed, args.n, args.gap)?;
    io::write_with(&args.out.join("low.jsonl"), |w| write_dump_to(&fx.low_model, w).map_err(into_io))?;
    io::write_with(&args.out.join("high.jsonl"), |w| write_dump_to(&fx.high_model, w).map_err(into_io))?;
    io::write_with(&args.out.join("labels.jsonl"), |w| write_labels(&fx.labels, w))?;
    Ok(())
}

fn into_io(e: tindex_core::backend::DumpError) -> std::io::Error {
    std::io::Error::other(e.to_string())
}
