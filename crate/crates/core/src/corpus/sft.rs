use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, TrainingPair};

pub const SOURCE_PLACEHOLDER: &str = "{source}";

/// Prompt text with a `{source}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate(String);

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self, CorpusError> {
        let t = template.into();
        if !t.contains(SOURCE_PLACEHOLDER) {
            return Err(CorpusError::MissingPlaceholder { placeholder: SOURCE_PLACEHOLDER });
        }
        Ok(Self(t))
    }

    /// An instruction line followed by the source text.
    pub fn with_instruction(instruction: &str) -> Self {
        Self(format!("{instruction}\n{SOURCE_PLACEHOLDER}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn render(&self, source: &str) -> String {
        self.0.replace(SOURCE_PLACEHOLDER, source)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Low,
    High,
}

impl std::str::FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Side::Low),
            "high" => Ok(Side::High),
            other => Err(format!("side must be low or high, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub completion: String,
}

/// Writes one `{"prompt", "completion"}` line per pair, in input order.
pub fn write_sft<W: Write>(
    pairs: &[TrainingPair],
    side: Side,
    template: &PromptTemplate,
    mut w: W,
) -> Result<(), CorpusError> {
    for p in pairs {
        let (source, translation) = match side {
            Side::Low => (&p.low_source, &p.low),
            Side::High => (&p.high_source, &p.high),
        };
        let rec = SftRecord { prompt: template.render(&source.text), completion: translation.text.clone() };
        serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn export_sft(
    pairs: &[TrainingPair],
    side: Side,
    template: &PromptTemplate,
    path: &Path,
) -> Result<(), CorpusError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_sft(pairs, side, template, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::triplet;

    fn pairs(n: usize) -> Vec<TrainingPair> {
        (0..n)
            .map(|i| {
                let t = triplet(i, "OT", "qwen");
                TrainingPair { low_source: t.source.clone(), low: t.low, high_source: t.source, high: t.high }
            })
            .collect()
    }

    fn lines(pairs: &[TrainingPair], side: Side) -> Vec<SftRecord> {
        let mut buf = Vec::new();
        write_sft(pairs, side, &PromptTemplate::with_instruction("Translate:"), &mut buf).unwrap();
        String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
    }

    #[test]
    fn side_selects_completion() {
        let p = pairs(1);
        assert_eq!(lines(&p, Side::Low)[0].completion, p[0].low.text);
        assert_eq!(lines(&p, Side::High)[0].completion, p[0].high.text);
        assert_eq!(lines(&p, Side::Low)[0].prompt, "Translate:\nsource 0");
    }

    #[test]
    fn order_and_count() {
        let p = pairs(1000);
        let out = lines(&p, Side::High);
        assert_eq!(out.len(), 1000);
        for (rec, pair) in out.iter().zip(&p) {
            assert_eq!(rec.completion, pair.high.text);
        }
    }

    #[test]
    fn placeholder_required() {
        assert!(matches!(PromptTemplate::new("no slot"), Err(CorpusError::MissingPlaceholder { .. })));
        assert!(PromptTemplate::new("x {source} y").is_ok());
    }

    #[test]
    fn byte_stable() {
        let p = pairs(3);
        let t = PromptTemplate::with_instruction("请翻译：");
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_sft(&p, Side::Low, &t, &mut a).unwrap();
        write_sft(&p, Side::Low, &t, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.ends_with(b"\n"));
    }
}
