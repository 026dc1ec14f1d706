use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CorpusError, Triplet};

/// Binary class of a scored sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Low,
    High,
}

impl Label {
    pub fn is_high(self) -> bool {
        self == Label::High
    }
}

/// Ground truth for one dump sample. `domain` groups samples into the
/// columns of a per-domain report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub sample_id: String,
    pub label: Label,
    #[serde(default = "default_domain")]
    pub domain: String,
}

fn default_domain() -> String {
    "all".to_string()
}

/// Two labels per triplet, keyed by translation id, domain "genre/author".
pub fn labels_from_triplets(triplets: &[Triplet]) -> Vec<LabelRecord> {
    triplets
        .iter()
        .flat_map(|t| {
            let domain = t.domain().to_string();
            [
                LabelRecord { sample_id: t.low.id.clone(), label: Label::Low, domain: domain.clone() },
                LabelRecord { sample_id: t.high.id.clone(), label: Label::High, domain },
            ]
        })
        .collect()
}

pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<LabelRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabelRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed { line: i + 1, message: e.to_string() })?;
        if !seen.insert(rec.sample_id.clone()) {
            return Err(CorpusError::DuplicateId { line: i + 1, kind: "label", id: rec.sample_id });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_labels<W: Write>(labels: &[LabelRecord], mut w: W) -> std::io::Result<()> {
    for l in labels {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::triplet;

    #[test]
    fn two_labels_per_triplet() {
        let ls = labels_from_triplets(&[triplet(0, "OT", "qwen")]);
        assert_eq!(ls.len(), 2);
        assert_eq!(ls[0].label, Label::Low);
        assert_eq!(ls[1].domain, "OT/qwen");
        let mut buf = Vec::new();
        write_labels(&ls, &mut buf).unwrap();
        assert_eq!(parse_labels(buf.as_slice()).unwrap(), ls);
    }

    #[test]
    fn domain_defaults_and_duplicates() {
        let one = parse_labels(r#"{"sample_id":"a","label":"high"}"#.as_bytes()).unwrap();
        assert_eq!(one[0].domain, "all");
        let dup = "{\"sample_id\":\"a\",\"label\":\"high\"}\n{\"sample_id\":\"a\",\"label\":\"low\"}";
        assert!(matches!(parse_labels(dup.as_bytes()), Err(CorpusError::DuplicateId { line: 2, .. })));
    }
}
