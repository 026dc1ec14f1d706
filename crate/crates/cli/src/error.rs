use std::fmt;
use std::path::Path;

use tindex_core::ErrorClass;

/// A failure with its exit-code class attached.
#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Validation, message: message.into() }
    }

    pub fn capability(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Capability, message: message.into() }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self { class: ErrorClass::Io, message: format!("{}: {err}", path.display()) }
    }

    /// Prefixes the message with the file it came from.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.class)
    }
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Capability => 3,
        ErrorClass::Io => 4,
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

macro_rules! classed {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                Self { class: e.class(), message: e.to_string() }
            }
        })*
    };
}

classed!(
    tindex_core::corpus::CorpusError,
    tindex_core::backend::DumpError,
    tindex_core::backend::BackendError,
    tindex_core::scoring::ScoringError,
    tindex_core::scoring::ScoreFileError,
    tindex_core::stats::StatsError,
    tindex_core::features::FeatureError,
    tindex_core::features::LexiconError,
    tindex_core::shifts::ShiftError,
    tindex_core::annotations::AnnotationError,
);

impl From<tindex_core::fixture::NegativeGap> for CliError {
    fn from(e: tindex_core::fixture::NegativeGap) -> Self {
        Self::validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
