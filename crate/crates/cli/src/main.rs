use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ttk::commands::{dataset, dump, eval, human, qe, remote, shifts, stats};
use ttk::render::{cmd_report, ReportArgs};
use ttk::CliResult;

#[derive(Parser, Debug)]
#[command(name = "ttk", version, about = "Translationese index scoring and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build, split and export translation datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Check score dumps or write the synthetic fixture.
    #[command(subcommand)]
    Dump(DumpCommand),
    /// Fetch token logprobs from a completions endpoint into a dump.
    Fetch(remote::FetchArgs),
    /// Generate translations with a chat endpoint.
    Generate(remote::GenerateArgs),
    /// Score dump samples with one method.
    Score(eval::ScoreArgs),
    /// Accuracy and AUROC of methods on labeled dumps.
    EvalBinary(eval::EvalBinaryArgs),
    /// Agreement of methods with pairwise human majority votes.
    EvalPairwise(human::PairwiseArgs),
    /// Correlation of methods with pointwise human ratings.
    EvalPointwise(human::PointwiseArgs),
    /// Correlation of scores with quality-estimation metrics.
    QeCorrelate(qe::QeArgs),
    /// Sentence BLEU as quality-estimation records.
    QeBleu(qe::BleuArgs),
    /// Corpus statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Decompose cross-domain likelihood shifts.
    Shifts(shifts::ShiftArgs),
    /// Text similarity and T-index gaps by annotator agreement.
    Disagreement(human::DisagreementArgs),
    /// Render a stored report as JSON, CSV or SVG.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum DatasetCommand {
    /// Pair low and high translations into triplets.
    Build(dataset::BuildArgs),
    /// Per-domain train/valid/test split.
    Split(dataset::SplitArgs),
    /// Draw training pairs with a domain-mixing strategy.
    Select(dataset::SelectArgs),
    /// Write SFT prompt/completion records.
    ExportSft(dataset::ExportSftArgs),
}

#[derive(Subcommand, Debug)]
enum DumpCommand {
    Validate(dump::ValidateArgs),
    Fixture(dump::FixtureArgs),
}

#[derive(Subcommand, Debug)]
enum StatsCommand {
    /// Surface features of the low and high corpora with t-tests.
    Corpus(stats::CorpusArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Dataset(DatasetCommand::Build(a)) => {
            let s = dataset::cmd_dataset_build(&a)?;
            eprintln!("{} triplets, {} orphans", s.triplets, s.orphans.len());
            for o in &s.orphans {
                eprintln!("orphan {} (source {}, author {}): {:?}", o.translation_id, o.source_id, o.author, o.reason);
            }
        }
        Command::Dataset(DatasetCommand::Split(a)) => {
            let (tr, va, te) = dataset::cmd_dataset_split(&a)?;
            eprintln!("train {tr}, valid {va}, test {te}");
        }
        Command::Dataset(DatasetCommand::Select(a)) => {
            eprintln!("{} training pairs", dataset::cmd_dataset_select(&a)?);
        }
        Command::Dataset(DatasetCommand::ExportSft(a)) => {
            eprintln!("{} SFT records", dataset::cmd_dataset_export_sft(&a)?);
        }
        Command::Dump(DumpCommand::Validate(a)) => {
            let s = dump::cmd_dump_validate(&a)?;
            let models: Vec<&str> = s.models.iter().map(String::as_str).collect();
            println!(
                "ok: {} records, models [{}], {} with entropies, {} with embeddings",
                s.records,
                models.join(", "),
                s.with_entropies,
                s.with_embeddings
            );
        }
        Command::Dump(DumpCommand::Fixture(a)) => {
            dump::cmd_dump_fixture(&a)?;
            eprintln!("wrote low.jsonl, high.jsonl and labels.jsonl to {}", a.out.display());
        }
        Command::Fetch(a) => {
            eprintln!("fetched {} samples", remote::cmd_fetch(&a)?);
        }
        Command::Generate(a) => {
            eprintln!("generated {} translations", remote::cmd_generate(&a)?);
        }
        Command::Score(a) => {
            let s = eval::cmd_score(&a)?;
            eprintln!("{} scores written", s.written);
            if s.undefined > 0 {
                eprintln!("warning: {} samples had an undefined score and were skipped", s.undefined);
            }
        }
        Command::EvalBinary(a) => {
            eval::run_eval_binary(&a)?;
        }
        Command::EvalPairwise(a) => {
            human::cmd_eval_pairwise(&a)?;
        }
        Command::EvalPointwise(a) => {
            human::cmd_eval_pointwise(&a)?;
        }
        Command::QeCorrelate(a) => {
            qe::cmd_qe_correlate(&a)?;
        }
        Command::QeBleu(a) => {
            eprintln!("{} BLEU records", qe::cmd_qe_bleu(&a)?);
        }
        Command::Stats(StatsCommand::Corpus(a)) => {
            stats::cmd_stats_corpus(&a)?;
        }
        Command::Shifts(a) => {
            shifts::cmd_shifts(&a)?;
        }
        Command::Disagreement(a) => {
            human::cmd_disagreement(&a)?;
        }
        Command::Report(a) => {
            for p in cmd_report(&a)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
