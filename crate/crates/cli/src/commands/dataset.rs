use std::path::PathBuf;

use clap::Args;
use tindex_core::backend::default_scoring_template;
use tindex_core::corpus::{
    build_triplets, export_sft, labels_from_triplets, load_dataset, select_training_pairs, split, write_labels,
    DomainKey, MixKind, MixStrategy, Orphan, PromptTemplate, Side, SplitSpec, TrainingPair, Triplet,
};

use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Dataset JSONL with source and translation records.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Where to write the paired triplets (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one label record per paired translation.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Also write translations that did not pair up.
    #[arg(long)]
    pub orphans_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildSummary {
    pub triplets: usize,
    pub orphans: Vec<Orphan>,
}

pub fn cmd_dataset_build(args: &BuildArgs) -> CliResult<BuildSummary> {
    let ds = load_dataset(&args.dataset).map_err(|e| CliError::from(e).in_file(&args.dataset))?;
    let built = build_triplets(&ds)?;
    io::write_jsonl(&args.out, &built.triplets)?;
    if let Some(p) = &args.labels_out {
        let labels = labels_from_triplets(&built.triplets);
        io::write_with(p, |w| write_labels(&labels, w))?;
    }
    if let Some(p) = &args.orphans_out {
        io::write_jsonl(p, &built.orphans)?;
    }
    Ok(BuildSummary { triplets: built.triplets.len(), orphans: built.orphans })
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Training triplets per (genre, author) domain.
    #[arg(long)]
    pub train_n: usize,
    #[arg(long)]
    pub valid_n: usize,
    #[arg(long)]
    pub test_n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory; receives {train,valid,test}.jsonl and matching
    /// labels_{train,valid,test}.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

/// Returns the (train, valid, test) sizes.
pub fn cmd_dataset_split(args: &SplitArgs) -> CliResult<(usize, usize, usize)> {
    let ds = load_dataset(&args.dataset).map_err(|e| CliError::from(e).in_file(&args.dataset))?;
    let built = build_triplets(&ds)?;
    let spec = SplitSpec { train_n: args.train_n, valid_n: args.valid_n, test_n: args.test_n, seed: args.seed };
    let s = split(&built.triplets, &spec)?;
    for (name, part) in [("train", &s.train), ("valid", &s.valid), ("test", &s.test)] {
        io::write_jsonl(&args.out.join(format!("{name}.jsonl")), part)?;
        let labels = labels_from_triplets(part);
        io::write_with(&args.out.join(format!("labels_{name}.jsonl")), |w| write_labels(&labels, w))?;
    }
    Ok((s.train.len(), s.valid.len(), s.test.len()))
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    /// Triplets JSONL, usually a training split.
    #[arg(long)]
    pub triplets: PathBuf,
    /// unpaired, single_domain or mixed_domain.
    #[arg(long)]
    pub kind: MixKind,
    /// Number of training pairs to draw.
    #[arg(long)]
    pub k: usize,
    /// Domain as GENRE/AUTHOR; repeat for several. Unpaired takes the low
    /// side's domain first, then the high side's.
    #[arg(long = "domain")]
    pub domains: Vec<DomainKey>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_dataset_select(args: &SelectArgs) -> CliResult<usize> {
    let triplets: Vec<Triplet> = io::read_jsonl(&args.triplets)?;
    let strategy = MixStrategy {
        kind: args.kind,
        k: args.k,
        domains: (!args.domains.is_empty()).then(|| args.domains.clone()),
        seed: args.seed,
    };
    let pairs = select_training_pairs(&triplets, &strategy)?;
    io::write_jsonl(&args.out, &pairs)?;
    Ok(pairs.len())
}

#[derive(Debug, Clone, Args)]
pub struct ExportSftArgs {
    /// Training pairs JSONL from `dataset select`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Which side to export: low trains the idiomatic scorer, high the
    /// literal one.
    #[arg(long)]
    pub side: Side,
    /// Prompt template file containing `{source}`; defaults to the bundled
    /// scoring prompt so training and scoring see the same context.
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_dataset_export_sft(args: &ExportSftArgs) -> CliResult<usize> {
    let pairs: Vec<TrainingPair> = io::read_jsonl(&args.pairs)?;
    let template = match &args.template {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            PromptTemplate::new(text).map_err(|e| CliError::from(e).in_file(p))?
        }
        None => default_scoring_template(),
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    export_sft(&pairs, args.side, &template, &args.out)?;
    Ok(pairs.len())
}
