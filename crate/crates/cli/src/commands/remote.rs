//! Subcommands that talk to an OpenAI-compatible endpoint.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use tindex_core::backend::{
    write_dump_to, BackendClient, BackendConfig, FetchItem, GenerationPrompt, LogprobCache, PromptKind, API_KEY_ENV,
};
use tindex_core::corpus::{load_dataset, Condition, Dataset, DatasetRecord, PromptTemplate, TranslationRecord};

use super::load_labels;
use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct EndpointArgs {
    /// Base URL including the API version, e.g. http://localhost:8000/v1.
    #[arg(long)]
    pub base_url: String,
    #[arg(long)]
    pub model_id: String,
    /// Concurrent requests.
    #[arg(long, default_value_t = 4)]
    pub max_parallel: usize,
    /// Retries after the first attempt on transport errors, 408, 429 and 5xx.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
}

impl EndpointArgs {
    /// Client configuration; the API key comes from the environment.
    pub fn config(&self) -> BackendConfig {
        BackendConfig {
            max_parallel: self.max_parallel,
            retries: self.retries,
            timeout: Duration::from_secs(self.timeout_secs),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            ..BackendConfig::new(&self.base_url, &self.model_id)
        }
    }
}

fn read_template(path: &PathBuf) -> CliResult<PromptTemplate> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    PromptTemplate::new(text).map_err(|e| CliError::from(e).in_file(path))
}

#[derive(Debug, Clone, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Only fetch the translations listed in this label file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Scoring prompt template with a `{source}` placeholder.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Directory for the on-disk logprob cache.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Dump JSONL output.
    #[arg(long)]
    pub out: PathBuf,
}

/// Fetches token logprobs for every translation (or every labeled one) and
/// writes them as a dump in dataset order.
pub fn cmd_fetch(args: &FetchArgs) -> CliResult<usize> {
    let ds = load_dataset(&args.dataset).map_err(|e| CliError::from(e).in_file(&args.dataset))?;
    let wanted: Option<HashSet<String>> = match &args.labels {
        Some(p) => Some(load_labels(p)?.into_iter().map(|l| l.sample_id).collect()),
        None => None,
    };
    let items: Vec<FetchItem> = ds
        .translations()
        .iter()
        .filter(|t| wanted.as_ref().is_none_or(|w| w.contains(&t.id)))
        .map(|t| FetchItem {
            sample_id: t.id.clone(),
            source: ds.source(&t.source_id).map(|s| s.text.clone()).unwrap_or_default(),
            translation: t.text.clone(),
        })
        .collect();
    if let Some(w) = &wanted {
        let have: HashSet<&str> = items.iter().map(|i| i.sample_id.as_str()).collect();
        if let Some(missing) = w.iter().find(|id| !have.contains(id.as_str())) {
            return Err(CliError::validation(format!(
                "labeled sample {missing:?} is not a translation in the dataset"
            )));
        }
    }
    let mut client = BackendClient::http(args.endpoint.config())?;
    if let Some(dir) = &args.cache_dir {
        let cache = LogprobCache::with_dir(dir.clone()).map_err(|e| CliError::io(dir, e))?;
        client = client.with_cache(Arc::new(cache));
    }
    if let Some(t) = &args.template {
        client = client.with_scoring_template(read_template(t)?);
    }
    let recs = client.fetch_batch(&items).into_iter().collect::<Result<Vec<_>, _>>()?;
    io::write_with(&args.out, |w| write_dump_to(&recs, w).map_err(|e| std::io::Error::other(e.to_string())))?;
    Ok(recs.len())
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Dataset whose sources are translated.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Prompting strategy: low, high or vanilla.
    #[arg(long)]
    pub prompt: PromptKind,
    /// Custom chat prompt with a `{source}` placeholder.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Author tag recorded on the new translations.
    #[arg(long)]
    pub author: String,
    /// Condition recorded on the new translations; defaults to the one the
    /// prompt targets (wild for vanilla).
    #[arg(long)]
    pub condition: Option<Condition>,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
    /// Dataset JSONL output: the input records plus the new translations.
    #[arg(long)]
    pub out: PathBuf,
}

/// Translates every source with the chosen prompt. New translation ids are
/// `<source_id>:<author>:<condition>`.
pub fn cmd_generate(args: &GenerateArgs) -> CliResult<usize> {
    let ds = load_dataset(&args.dataset).map_err(|e| CliError::from(e).in_file(&args.dataset))?;
    let prompt = match &args.template {
        Some(p) => GenerationPrompt::custom(args.prompt, read_template(p)?),
        None => GenerationPrompt::bundled(args.prompt),
    };
    let condition = args.condition.unwrap_or(match args.prompt {
        PromptKind::LowTranslationese => Condition::Low,
        PromptKind::HighTranslationese => Condition::High,
        PromptKind::Vanilla => Condition::Wild,
    });
    let config = args.endpoint.config();
    let workers = config.max_parallel.max(1);
    let client = BackendClient::http(config)?;
    let sources = ds.sources();
    // Strided work split; results are put back in source order.
    let mut texts: Vec<Option<Result<String, CliError>>> = (0..sources.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (client, prompt) = (&client, &prompt);
                scope.spawn(move || {
                    (w..sources.len())
                        .step_by(workers)
                        .map(|i| (i, client.generate_translation(prompt, &sources[i].text).map_err(CliError::from)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("generation worker panicked") {
                texts[i] = Some(r);
            }
        }
    });
    let mut records: Vec<DatasetRecord> = sources.iter().cloned().map(DatasetRecord::Source).collect();
    records.extend(ds.translations().iter().cloned().map(DatasetRecord::Translation));
    for (s, text) in sources.iter().zip(texts) {
        let text = text.expect("every source was assigned to a worker")?;
        records.push(DatasetRecord::Translation(TranslationRecord {
            id: format!("{}:{}:{}", s.id, args.author, condition),
            source_id: s.id.clone(),
            author: args.author.clone(),
            condition,
            text: text.trim().to_string(),
        }));
    }
    let out = Dataset::from_records(records)?;
    io::write_with(&args.out, |w| out.write_jsonl(w))?;
    Ok(sources.len())
}
