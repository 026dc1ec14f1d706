//! Report envelope and provenance hashing.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = concat!("ttk ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    BinaryEval,
    PairwiseEval,
    PointwiseEval,
    CorpusStats,
    ShiftReport,
    QeCorrelation,
    Disagreement,
}

impl ReportKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::BinaryEval => "binary_eval",
            ReportKind::PairwiseEval => "pairwise_eval",
            ReportKind::PointwiseEval => "pointwise_eval",
            ReportKind::CorpusStats => "corpus_stats",
            ReportKind::ShiftReport => "shift_report",
            ReportKind::QeCorrelation => "qe_correlation",
            ReportKind::Disagreement => "disagreement",
        }
    }
}

/// A result table plus the provenance needed to reproduce it. The payload
/// schema is fixed per kind; see the `*Payload` types in [`crate::commands`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ReportKind,
    pub tool_version: String,
    pub config_hash: String,
    pub payload: serde_json::Value,
}

impl EvalReport {
    pub fn new<P: Serialize>(kind: ReportKind, config_hash: String, payload: &P) -> CliResult<Self> {
        let payload = serde_json::to_value(payload)
            .map_err(|e| CliError::validation(format!("cannot serialize {} payload: {e}", kind.as_str())))?;
        Ok(Self { kind, tool_version: TOOL_VERSION.to_string(), config_hash, payload })
    }

    /// Decodes the payload, checking the kind first.
    pub fn payload<P: DeserializeOwned>(&self, kind: ReportKind) -> CliResult<P> {
        if self.kind != kind {
            return Err(CliError::validation(format!(
                "expected a {} report, got {}",
                kind.as_str(),
                self.kind.as_str()
            )));
        }
        serde_json::from_value(self.payload.clone())
            .map_err(|e| CliError::validation(format!("malformed {} payload: {e}", kind.as_str())))
    }

    /// Pretty JSON with a trailing newline. Object keys come out sorted, so
    /// equal reports always serialize to equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain JSON");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("not a report: {e}")))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }
}

/// Hashes a subcommand's configuration: its name, every flag, and every
/// input file by path and content. Entries are length-prefixed so that
/// adjacent values cannot run together.
pub struct ConfigHasher {
    hasher: Sha256,
}

impl ConfigHasher {
    pub fn new(command: &str) -> Self {
        let mut h = Self { hasher: Sha256::new() };
        h.put("tool", TOOL_VERSION);
        h.put("command", command);
        h
    }

    fn put(&mut self, tag: &str, value: &str) {
        for part in [tag, value] {
            self.hasher.update((part.len() as u64).to_le_bytes());
            self.hasher.update(part.as_bytes());
        }
    }

    pub fn flag(mut self, name: &str, value: impl std::fmt::Display) -> Self {
        self.put(&format!("flag:{name}"), &value.to_string());
        self
    }

    pub fn input(mut self, name: &str, path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.put(&format!("input:{name}"), &path.display().to_string());
        self.put(&format!("content:{name}"), &hex::encode(Sha256::digest(&bytes)));
        Ok(self)
    }

    pub fn inputs(mut self, name: &str, paths: &[impl AsRef<Path>]) -> CliResult<Self> {
        for (i, p) in paths.iter().enumerate() {
            self = self.input(&format!("{name}[{i}]"), p.as_ref())?;
        }
        Ok(self)
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_flags_and_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        std::fs::write(&p, "one").unwrap();
        let h = |seed: u64| ConfigHasher::new("x").flag("seed", seed).input("a", &p).unwrap().finish();
        assert_eq!(h(1), h(1));
        assert_ne!(h(1), h(2));
        let before = h(1);
        std::fs::write(&p, "two").unwrap();
        assert_ne!(before, h(1));
        assert!(ConfigHasher::new("x").input("a", &dir.path().join("missing")).is_err());
    }

    #[test]
    fn payload_kind_is_checked() {
        let r = EvalReport::new(ReportKind::ShiftReport, "h".into(), &vec![1, 2]).unwrap();
        assert!(r.payload::<Vec<i32>>(ReportKind::BinaryEval).is_err());
        assert_eq!(r.payload::<Vec<i32>>(ReportKind::ShiftReport).unwrap(), vec![1, 2]);
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }
}
