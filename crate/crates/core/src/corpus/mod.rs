//! Sources, translations and paired triplets; split construction,
//! training-pair selection and SFT export.

mod dataset;
mod labels;
mod select;
mod sft;
mod split;
#[cfg(test)]
pub(crate) mod test_support;

pub use dataset::{
    build_triplets, load_dataset, parse_dataset, Condition, Dataset, DatasetRecord, DomainKey, Orphan, OrphanReason,
    SourceText, TranslationRecord, Triplet, TripletBuild,
};
pub use labels::{labels_from_triplets, parse_labels, write_labels, Label, LabelRecord};
pub use select::{select_training_pairs, MixKind, MixStrategy, TrainingPair};
pub use sft::{export_sft, write_sft, PromptTemplate, SftRecord, Side, SOURCE_PLACEHOLDER};
pub use split::{split, SplitSpec, Splits};

use crate::error::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: translation {translation_id} refers to unknown source_id {source_id:?}")]
    DanglingSource { line: usize, translation_id: String, source_id: String },
    #[error("line {line}: duplicate {kind} id {id:?}")]
    DuplicateId { line: usize, kind: &'static str, id: String },
    #[error("line {line}: {kind} {id:?} has empty text")]
    EmptyText { line: usize, kind: &'static str, id: String },
    #[error("ambiguous pairing: source {source_id:?}, author {author:?} has {count} {condition} translations")]
    Ambiguous { source_id: String, author: String, condition: Condition, count: usize },
    #[error("domain {domain} has {available} triplets, {requested} requested")]
    InsufficientTriplets { domain: DomainKey, available: usize, requested: usize },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("template has no {placeholder} placeholder")]
    MissingPlaceholder { placeholder: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CorpusError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}
