use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceText {
    pub id: String,
    pub genre: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Low,
    High,
    Wild,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Low => "low",
            Condition::High => "high",
            Condition::Wild => "wild",
        })
    }
}

impl std::str::FromStr for Condition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Condition::Low),
            "high" => Ok(Condition::High),
            "wild" => Ok(Condition::Wild),
            other => Err(format!("unknown condition {other:?} (expected low, high or wild)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRecord {
    pub id: String,
    pub source_id: String,
    pub author: String,
    pub condition: Condition,
    pub text: String,
}

/// One line of the dataset JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetRecord {
    Source(SourceText),
    Translation(TranslationRecord),
}

/// (genre, author): the unit over which splits and domain mixing operate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DomainKey {
    pub genre: String,
    pub author: String,
}

impl DomainKey {
    pub fn new(genre: impl Into<String>, author: impl Into<String>) -> Self {
        Self { genre: genre.into(), author: author.into() }
    }
}

impl fmt::Display for DomainKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.genre, self.author)
    }
}

impl std::str::FromStr for DomainKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once('/') {
            Some((g, a)) if !g.is_empty() && !a.is_empty() => Ok(DomainKey::new(g, a)),
            _ => Err(format!("domain must look like GENRE/AUTHOR, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub source: SourceText,
    pub low: TranslationRecord,
    pub high: TranslationRecord,
}

impl Triplet {
    pub fn domain(&self) -> DomainKey {
        DomainKey::new(&self.source.genre, &self.low.author)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    sources: Vec<SourceText>,
    translations: Vec<TranslationRecord>,
    source_index: HashMap<String, usize>,
    translation_index: HashMap<String, usize>,
}

impl Dataset {
    pub fn sources(&self) -> &[SourceText] {
        &self.sources
    }

    pub fn translations(&self) -> &[TranslationRecord] {
        &self.translations
    }

    pub fn source(&self, id: &str) -> Option<&SourceText> {
        self.source_index.get(id).map(|&i| &self.sources[i])
    }

    pub fn translation(&self, id: &str) -> Option<&TranslationRecord> {
        self.translation_index.get(id).map(|&i| &self.translations[i])
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty() && self.translations.is_empty()
    }

    /// Builds a dataset from records, applying the same checks as the loader
    /// (line numbers are 1-based positions in `records`).
    pub fn from_records(records: Vec<DatasetRecord>) -> Result<Self, CorpusError> {
        let mut ds = Dataset::default();
        let mut translation_lines = Vec::new();
        for (i, rec) in records.into_iter().enumerate() {
            ds.push(i + 1, rec, &mut translation_lines)?;
        }
        ds.check_references(&translation_lines)?;
        Ok(ds)
    }

    fn push(&mut self, line: usize, rec: DatasetRecord, translation_lines: &mut Vec<usize>) -> Result<(), CorpusError> {
        match rec {
            DatasetRecord::Source(s) => {
                if s.text.is_empty() {
                    return Err(CorpusError::EmptyText { line, kind: "source", id: s.id });
                }
                if self.source_index.contains_key(&s.id) {
                    return Err(CorpusError::DuplicateId { line, kind: "source", id: s.id });
                }
                self.source_index.insert(s.id.clone(), self.sources.len());
                self.sources.push(s);
            }
            DatasetRecord::Translation(t) => {
                if t.text.is_empty() {
                    return Err(CorpusError::EmptyText { line, kind: "translation", id: t.id });
                }
                if self.translation_index.contains_key(&t.id) {
                    return Err(CorpusError::DuplicateId { line, kind: "translation", id: t.id });
                }
                self.translation_index.insert(t.id.clone(), self.translations.len());
                self.translations.push(t);
                translation_lines.push(line);
            }
        }
        Ok(())
    }

    fn check_references(&self, translation_lines: &[usize]) -> Result<(), CorpusError> {
        for (t, &line) in self.translations.iter().zip(translation_lines) {
            if !self.source_index.contains_key(&t.source_id) {
                return Err(CorpusError::DanglingSource {
                    line,
                    translation_id: t.id.clone(),
                    source_id: t.source_id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Sources first, then translations, one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for s in &self.sources {
            serde_json::to_writer(&mut w, &DatasetRecord::Source(s.clone()))?;
            w.write_all(b"\n")?;
        }
        for t in &self.translations {
            serde_json::to_writer(&mut w, &DatasetRecord::Translation(t.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Parses dataset JSONL. Blank lines are skipped; every other line must be a
/// source or translation record.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Dataset, CorpusError> {
    let mut ds = Dataset::default();
    let mut translation_lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;
        ds.push(line_no, rec, &mut translation_lines)?;
    }
    ds.check_references(&translation_lines)?;
    Ok(ds)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CorpusError> {
    let f = std::fs::File::open(path)?;
    parse_dataset(BufReader::new(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrphanReason {
    MissingLow,
    MissingHigh,
}

/// A low/high translation that did not form a complete pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orphan {
    pub translation_id: String,
    pub source_id: String,
    pub author: String,
    pub condition: Condition,
    pub reason: OrphanReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletBuild {
    pub triplets: Vec<Triplet>,
    pub orphans: Vec<Orphan>,
}

/// Pairs low and high translations sharing (source_id, author).
///
/// Groups are emitted in order of their first translation in the dataset.
/// `wild` translations are not paired and are neither triplets nor orphans.
pub fn build_triplets(ds: &Dataset) -> Result<TripletBuild, CorpusError> {
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut seen = HashSet::new();
    let mut groups: HashMap<(&str, &str), (Vec<&TranslationRecord>, Vec<&TranslationRecord>)> = HashMap::new();
    for t in &ds.translations {
        let key = (t.source_id.as_str(), t.author.as_str());
        let slot = match t.condition {
            Condition::Wild => continue,
            Condition::Low => 0,
            Condition::High => 1,
        };
        if seen.insert(key) {
            order.push(key);
        }
        let g = groups.entry(key).or_default();
        if slot == 0 {
            g.0.push(t);
        } else {
            g.1.push(t);
        }
    }
    let mut out = TripletBuild::default();
    for key in order {
        let (lows, highs) = &groups[&key];
        for (list, condition) in [(lows, Condition::Low), (highs, Condition::High)] {
            if list.len() > 1 {
                return Err(CorpusError::Ambiguous {
                    source_id: key.0.to_string(),
                    author: key.1.to_string(),
                    condition,
                    count: list.len(),
                });
            }
        }
        match (lows.first(), highs.first()) {
            (Some(low), Some(high)) => {
                let source = ds.source(key.0).expect("references checked at load").clone();
                out.triplets.push(Triplet { source, low: (*low).clone(), high: (*high).clone() });
            }
            (Some(t), None) | (None, Some(t)) => out.orphans.push(Orphan {
                translation_id: t.id.clone(),
                source_id: t.source_id.clone(),
                author: t.author.clone(),
                condition: t.condition,
                reason: if t.condition == Condition::Low {
                    OrphanReason::MissingHigh
                } else {
                    OrphanReason::MissingLow
                },
            }),
            (None, None) => unreachable!("group created only when a record is pushed"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Dataset, CorpusError> {
        parse_dataset(s.as_bytes())
    }

    const MINIMAL: &str = r#"{"kind":"source","id":"s1","genre":"OT","text":"Hello."}
{"kind":"translation","id":"t1","source_id":"s1","author":"qwen","condition":"low","text":"你好。"}
{"kind":"translation","id":"t2","source_id":"s1","author":"qwen","condition":"high","text":"哈喽。"}
"#;

    #[test]
    fn empty_file() {
        let ds = parse("").unwrap();
        assert!(ds.is_empty());
        assert!(build_triplets(&ds).unwrap().triplets.is_empty());
    }

    #[test]
    fn minimal_triplet() {
        let ds = parse(MINIMAL).unwrap();
        let b = build_triplets(&ds).unwrap();
        assert_eq!(b.triplets.len(), 1);
        assert!(b.orphans.is_empty());
        assert_eq!(b.triplets[0].low.id, "t1");
        assert_eq!(b.triplets[0].domain(), DomainKey::new("OT", "qwen"));
    }

    #[test]
    fn dangling_source_names_id() {
        let err =
            parse(r#"{"kind":"translation","id":"t1","source_id":"nope","author":"a","condition":"low","text":"x"}"#)
                .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nope"), "{msg}");
        assert!(matches!(err, CorpusError::DanglingSource { line: 1, .. }));
    }

    #[test]
    fn malformed_reports_line() {
        let err = parse("{\"kind\":\"source\",\"id\":\"s\",\"genre\":\"g\",\"text\":\"x\"}\n{oops\n").unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { line: 2, .. }));
        let err =
            parse(r#"{"kind":"translation","id":"t","source_id":"s","author":"a","condition":"medium","text":"x"}"#)
                .unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { line: 1, .. }));
    }

    #[test]
    fn duplicate_and_empty() {
        let dup = "{\"kind\":\"source\",\"id\":\"s\",\"genre\":\"g\",\"text\":\"x\"}\n{\"kind\":\"source\",\"id\":\"s\",\"genre\":\"g\",\"text\":\"y\"}\n";
        assert!(matches!(parse(dup), Err(CorpusError::DuplicateId { line: 2, .. })));
        let empty = "{\"kind\":\"source\",\"id\":\"s\",\"genre\":\"g\",\"text\":\"\"}\n";
        assert!(matches!(parse(empty), Err(CorpusError::EmptyText { .. })));
    }

    #[test]
    fn cross_author_pair_gives_orphans() {
        let ds = parse(
            r#"{"kind":"source","id":"s1","genre":"OT","text":"Hello."}
{"kind":"translation","id":"t1","source_id":"s1","author":"A","condition":"low","text":"x"}
{"kind":"translation","id":"t2","source_id":"s1","author":"B","condition":"high","text":"y"}"#,
        )
        .unwrap();
        let b = build_triplets(&ds).unwrap();
        assert!(b.triplets.is_empty());
        assert_eq!(b.orphans.len(), 2);
        assert_eq!(b.orphans[0].reason, OrphanReason::MissingHigh);
        assert_eq!(b.orphans[1].reason, OrphanReason::MissingLow);
    }

    #[test]
    fn two_lows_is_ambiguous() {
        let ds = parse(
            r#"{"kind":"source","id":"s1","genre":"OT","text":"Hello."}
{"kind":"translation","id":"t1","source_id":"s1","author":"A","condition":"low","text":"x"}
{"kind":"translation","id":"t2","source_id":"s1","author":"A","condition":"low","text":"y"}"#,
        )
        .unwrap();
        assert!(matches!(build_triplets(&ds), Err(CorpusError::Ambiguous { count: 2, .. })));
    }

    #[test]
    fn wild_bypasses_pairing() {
        let ds = parse(
            r#"{"kind":"source","id":"s1","genre":"OT","text":"Hello."}
{"kind":"translation","id":"w1","source_id":"s1","author":"deepl","condition":"wild","text":"x"}"#,
        )
        .unwrap();
        let b = build_triplets(&ds).unwrap();
        assert!(b.triplets.is_empty() && b.orphans.is_empty());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let ds = parse(MINIMAL).unwrap();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), MINIMAL);
        assert_eq!(parse_dataset(buf.as_slice()).unwrap(), ds);
    }
}
