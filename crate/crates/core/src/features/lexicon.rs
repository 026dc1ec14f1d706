use std::collections::BTreeSet;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::ErrorClass;

const FUNCTION_WORDS: &str = include_str!("../../data/lexicons/function_words.txt");
const PRONOUNS: &str = include_str!("../../data/lexicons/pronouns.txt");
const PUNCTUATION: &str = include_str!("../../data/lexicons/punctuation.txt");
const SENTENCE_ENDERS: &str = include_str!("../../data/lexicons/sentence_enders.txt");

/// File names expected in a lexicon directory.
pub const LEXICON_FILES: [&str; 4] = ["function_words.txt", "pronouns.txt", "punctuation.txt", "sentence_enders.txt"];

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{file}: list is empty")]
    Empty { file: &'static str },
    #[error("{file} line {line}: expected a single character, got {entry:?}")]
    NotACharacter { file: &'static str, line: usize, entry: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl LexiconError {
    pub fn class(&self) -> ErrorClass {
        match self {
            LexiconError::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    pub function_words: BTreeSet<String>,
    pub pronouns: BTreeSet<String>,
    pub punctuation: BTreeSet<char>,
    pub sentence_enders: BTreeSet<char>,
    /// SHA-256 over the four source files, in [`LEXICON_FILES`] order.
    pub fingerprint: String,
}

/// Entries of a list file: one per line, `# ` starts a comment line, blank
/// lines ignored. A bare `#` is a valid entry.
fn entries(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with("# "))
}

fn words(file: &'static str, text: &str) -> Result<BTreeSet<String>, LexiconError> {
    let set: BTreeSet<String> = entries(text).map(|(_, l)| l.trim().to_string()).collect();
    if set.is_empty() {
        return Err(LexiconError::Empty { file });
    }
    Ok(set)
}

fn chars(file: &'static str, text: &str) -> Result<BTreeSet<char>, LexiconError> {
    let mut set = BTreeSet::new();
    for (line, l) in entries(text) {
        let e = l.trim();
        let mut it = e.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => {
                set.insert(c);
            }
            _ => return Err(LexiconError::NotACharacter { file, line, entry: e.to_string() }),
        }
    }
    if set.is_empty() {
        return Err(LexiconError::Empty { file });
    }
    Ok(set)
}

impl Lexicons {
    /// Builds lexicons from the text of the four list files.
    pub fn from_texts(
        function_words: &str,
        pronouns: &str,
        punctuation: &str,
        sentence_enders: &str,
    ) -> Result<Self, LexiconError> {
        let mut h = Sha256::new();
        for t in [function_words, pronouns, punctuation, sentence_enders] {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
        }
        Ok(Self {
            function_words: words(LEXICON_FILES[0], function_words)?,
            pronouns: words(LEXICON_FILES[1], pronouns)?,
            punctuation: chars(LEXICON_FILES[2], punctuation)?,
            sentence_enders: chars(LEXICON_FILES[3], sentence_enders)?,
            fingerprint: hex::encode(h.finalize()),
        })
    }

    /// The default Chinese lists shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_texts(FUNCTION_WORDS, PRONOUNS, PUNCTUATION, SENTENCE_ENDERS).expect("bundled lexicons are valid")
    }

    /// Loads the four files from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|source| LexiconError::Io { path: p.display().to_string(), source })
        };
        let texts: Vec<String> = LEXICON_FILES.iter().map(|f| read(f)).collect::<Result<_, _>>()?;
        Self::from_texts(&texts[0], &texts[1], &texts[2], &texts[3])
    }

    /// Pronouns that are also listed as function words. Allowed, but the
    /// two frequencies then overlap.
    pub fn pronoun_overlap(&self) -> Vec<&str> {
        self.pronouns.iter().filter(|p| self.function_words.contains(*p)).map(String::as_str).collect()
    }
}
