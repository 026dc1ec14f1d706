//! Linguistic features of translations and the low-vs-high corpus
//! comparison.

mod lexicon;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lexicon::{LexiconError, Lexicons};

use crate::error::ErrorClass;
use crate::exec::{self, Execution};
use crate::stats::{mean, ttest_independent, StatsError, TTestVariant};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    /// Every non-whitespace character is a token.
    #[default]
    Character,
    /// Split on any Unicode whitespace.
    Whitespace,
    /// Input is already tokenized with single ASCII spaces between tokens.
    Pretokenized,
}

impl FromStr for TokenizeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "character" => Ok(TokenizeMode::Character),
            "whitespace" => Ok(TokenizeMode::Whitespace),
            "pretokenized" => Ok(TokenizeMode::Pretokenized),
            other => Err(format!("tokenize mode must be character, whitespace or pretokenized, got {other:?}")),
        }
    }
}

pub fn tokenize(text: &str, mode: TokenizeMode) -> Vec<String> {
    match mode {
        TokenizeMode::Character => text.chars().filter(|c| !c.is_whitespace()).map(String::from).collect(),
        TokenizeMode::Whitespace => text.split_whitespace().map(String::from).collect(),
        TokenizeMode::Pretokenized => {
            text.trim_end_matches(['\n', '\r']).split(' ').filter(|t| !t.is_empty()).map(String::from).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_sentence_length: f64,
    pub mean_word_length: f64,
    pub type_token_ratio: f64,
    pub func_word_freq: f64,
    pub pronoun_freq: f64,
    pub punct_freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    MeanSentenceLength,
    MeanWordLength,
    TypeTokenRatio,
    FuncWordFreq,
    PronounFreq,
    PunctFreq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Down,
    Up,
    Flat,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Down => "↓",
            Direction::Up => "↑",
            Direction::Flat => "=",
        })
    }
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::MeanSentenceLength,
        Feature::MeanWordLength,
        Feature::TypeTokenRatio,
        Feature::FuncWordFreq,
        Feature::PronounFreq,
        Feature::PunctFreq,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::MeanSentenceLength => "mean_sentence_length",
            Feature::MeanWordLength => "mean_word_length",
            Feature::TypeTokenRatio => "type_token_ratio",
            Feature::FuncWordFreq => "func_word_freq",
            Feature::PronounFreq => "pronoun_freq",
            Feature::PunctFreq => "punct_freq",
        }
    }

    /// Direction reported in the translationese literature for translated
    /// versus original Chinese.
    pub fn expected_direction(self) -> Direction {
        match self {
            Feature::FuncWordFreq | Feature::PronounFreq => Direction::Up,
            _ => Direction::Down,
        }
    }

    pub fn get(self, v: &FeatureVector) -> f64 {
        match self {
            Feature::MeanSentenceLength => v.mean_sentence_length,
            Feature::MeanWordLength => v.mean_word_length,
            Feature::TypeTokenRatio => v.type_token_ratio,
            Feature::FuncWordFreq => v.func_word_freq,
            Feature::PronounFreq => v.pronoun_freq,
            Feature::PunctFreq => v.punct_freq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("text has no tokens")]
    NoTokens,
    #[error("{0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("text {index} of the {corpus} corpus: {source}")]
    Text { corpus: &'static str, index: usize, source: Box<FeatureError> },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl FeatureError {
    pub fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

/// Number of sentences in a token stream. A sentence closes after a token
/// ending in a sentence ender, unless the next token is made only of
/// enders; a trailing unterminated stretch counts as a sentence.
fn count_sentences(tokens: &[String], lex: &Lexicons) -> usize {
    let is_ender = |c: char| lex.sentence_enders.contains(&c);
    let mut count = 0;
    let mut open = false;
    for (i, t) in tokens.iter().enumerate() {
        open = true;
        let ends = t.chars().last().is_some_and(is_ender);
        let next_all_enders = tokens.get(i + 1).is_some_and(|n| n.chars().all(is_ender));
        if ends && !next_all_enders {
            count += 1;
            open = false;
        }
    }
    count + usize::from(open)
}

pub fn extract_features(text: &str, lex: &Lexicons, mode: TokenizeMode) -> Result<FeatureVector, FeatureError> {
    let tokens = tokenize(text, mode);
    if tokens.is_empty() {
        return Err(FeatureError::NoTokens);
    }
    let n = tokens.len() as f64;
    let frac = |pred: &dyn Fn(&String) -> bool| tokens.iter().filter(|t| pred(t)).count() as f64 / n;
    let types: HashSet<&str> = tokens.iter().map(String::as_str).collect();
    let chars: usize = tokens.iter().map(|t| t.chars().count()).sum();
    Ok(FeatureVector {
        mean_sentence_length: n / count_sentences(&tokens, lex) as f64,
        mean_word_length: chars as f64 / n,
        type_token_ratio: types.len() as f64 / n,
        func_word_freq: frac(&|t| lex.function_words.contains(t)),
        pronoun_freq: frac(&|t| lex.pronouns.contains(t)),
        punct_freq: frac(&|t| t.chars().all(|c| lex.punctuation.contains(&c))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub feature: Feature,
    pub low: f64,
    pub high: f64,
    #[serde(with = "crate::serde_util::f64_nonfinite")]
    pub t: f64,
    #[serde(with = "crate::serde_util::f64_nonfinite")]
    pub df: f64,
    pub p_value: f64,
    pub expected: Direction,
    /// Direction of high relative to low.
    pub observed: Direction,
}

impl FeatureRow {
    pub fn agrees_with_expected(&self) -> bool {
        self.observed == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
    pub n_low: usize,
    pub n_high: usize,
    pub tokenize_mode: TokenizeMode,
    pub lexicon_hash: String,
}

fn corpus_vectors<S: AsRef<str> + Sync>(
    exec: Execution,
    texts: &[S],
    lex: &Lexicons,
    mode: TokenizeMode,
    corpus: &'static str,
) -> Result<Vec<FeatureVector>, FeatureError> {
    if texts.is_empty() {
        return Err(FeatureError::EmptyCorpus(corpus));
    }
    exec::map(exec, texts, |t| extract_features(t.as_ref(), lex, mode))
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| FeatureError::Text { corpus, index, source: Box::new(e) }))
        .collect()
}

/// Macro-averaged features per corpus with Welch t-tests. When both
/// corpora have zero variance and equal means the test is undefined; the
/// row then reports t = 0 and p = 1 since there is no difference at all.
pub fn corpus_compare<S: AsRef<str> + Sync>(
    exec: Execution,
    low_texts: &[S],
    high_texts: &[S],
    lex: &Lexicons,
    mode: TokenizeMode,
) -> Result<FeatureTable, FeatureError> {
    let low = corpus_vectors(exec, low_texts, lex, mode, "low")?;
    let high = corpus_vectors(exec, high_texts, lex, mode, "high")?;
    let mut rows = Vec::with_capacity(Feature::ALL.len());
    for f in Feature::ALL {
        let a: Vec<f64> = low.iter().map(|v| f.get(v)).collect();
        let b: Vec<f64> = high.iter().map(|v| f.get(v)).collect();
        let (lm, hm) = (mean(&a), mean(&b));
        let (t, df, p) = match ttest_independent(&b, &a, TTestVariant::Welch) {
            Ok(r) => (r.t, r.df, r.p),
            Err(StatsError::UndefinedT) => (0.0, f64::NAN, 1.0),
            Err(e) => return Err(e.into()),
        };
        let observed = if hm > lm {
            Direction::Up
        } else if hm < lm {
            Direction::Down
        } else {
            Direction::Flat
        };
        rows.push(FeatureRow {
            feature: f,
            low: lm,
            high: hm,
            t,
            df,
            p_value: p,
            expected: f.expected_direction(),
            observed,
        });
    }
    Ok(FeatureTable {
        rows,
        n_low: low.len(),
        n_high: high.len(),
        tokenize_mode: mode,
        lexicon_hash: lex.fingerprint.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicons {
        Lexicons::bundled()
    }

    #[test]
    fn tokenize_modes() {
        assert_eq!(tokenize("你好。", TokenizeMode::Character), ["你", "好", "。"]);
        assert_eq!(tokenize("a b", TokenizeMode::Whitespace), ["a", "b"]);
        assert_eq!(tokenize("我 喜欢 猫 。\n", TokenizeMode::Pretokenized), ["我", "喜欢", "猫", "。"]);
        assert_eq!(tokenize(" a\tb ", TokenizeMode::Pretokenized), ["a\tb"]);
    }

    #[test]
    fn simple_ratios() {
        let v = extract_features("a b a", &lex(), TokenizeMode::Whitespace).unwrap();
        assert!((v.type_token_ratio - 2.0 / 3.0).abs() < 1e-15);
        let v = extract_features("你好。", &lex(), TokenizeMode::Character).unwrap();
        assert!((v.punct_freq - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.mean_sentence_length, 3.0);
        assert!(matches!(extract_features("  ", &lex(), TokenizeMode::Character), Err(FeatureError::NoTokens)));
    }

    #[test]
    fn hand_counted_paragraph() {
        // 他 说 了 ， 我 们 在 家 。 你 呢 ？ ！ 好 的
        // 15 tokens; sentences: "...家。" "你呢？！" "好的" = 3
        // types: all distinct except none repeated -> 15
        // function words (single chars): 了 在 呢 的 = 4
        // pronouns: 他 我 你 = 3
        // punctuation: ， 。 ？ ！ = 4
        let v = extract_features("他说了，我们在家。你呢？！好的", &lex(), TokenizeMode::Character).unwrap();
        assert_eq!(v.mean_sentence_length, 5.0);
        assert_eq!(v.mean_word_length, 1.0);
        assert_eq!(v.type_token_ratio, 1.0);
        assert_eq!(v.func_word_freq, 4.0 / 15.0);
        assert_eq!(v.pronoun_freq, 3.0 / 15.0);
        assert_eq!(v.punct_freq, 4.0 / 15.0);
    }

    #[test]
    fn identical_corpora_have_no_difference() {
        let texts = ["我们在家。", "他说了很多话，也笑了。", "好。"];
        let t = corpus_compare(Execution::Sequential, &texts, &texts, &lex(), TokenizeMode::Character).unwrap();
        assert_eq!(t.rows.len(), 6);
        for r in &t.rows {
            assert_eq!(r.p_value, 1.0, "{:?}", r.feature);
            assert_eq!(r.low, r.high);
            assert_eq!(r.observed, Direction::Flat);
        }
        assert_eq!(t.lexicon_hash, lex().fingerprint);
    }

    #[test]
    fn planted_shorter_sentences_flag_down() {
        let low: Vec<String> = (0..20).map(|i| format!("{}。", "长".repeat(20 + i % 3))).collect();
        let high: Vec<String> = (0..20).map(|i| format!("{}。", "短".repeat(8 + i % 3))).collect();
        let t = corpus_compare(Execution::Parallel, &low, &high, &lex(), TokenizeMode::Character).unwrap();
        let row = &t.rows[0];
        assert_eq!(row.feature, Feature::MeanSentenceLength);
        assert_eq!(row.observed, Direction::Down);
        assert!(row.agrees_with_expected());
        assert!(row.p_value < 1e-10);
    }

    #[test]
    fn duplication_invariant() {
        let texts = vec!["他说了，我们在家。".to_string(), "你呢？好的。".to_string(), "猫猫猫。".to_string()];
        let doubled: Vec<String> = texts.iter().chain(&texts).cloned().collect();
        let a = corpus_compare(Execution::Sequential, &texts, &texts, &lex(), TokenizeMode::Character).unwrap();
        let b = corpus_compare(Execution::Sequential, &doubled, &doubled, &lex(), TokenizeMode::Character).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.low - y.low).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        let none: [&str; 0] = [];
        assert!(matches!(
            corpus_compare(Execution::Sequential, &none, &["a"], &lex(), TokenizeMode::Character),
            Err(FeatureError::EmptyCorpus("low"))
        ));
    }
}
