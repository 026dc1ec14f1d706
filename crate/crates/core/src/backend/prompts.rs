use serde::{Deserialize, Serialize};

use crate::corpus::PromptTemplate;

const LOW: &str = include_str!("../../data/prompts/low_translationese.txt");
const HIGH: &str = include_str!("../../data/prompts/high_translationese.txt");
const VANILLA: &str = include_str!("../../data/prompts/vanilla.txt");
const SCORING: &str = include_str!("../../data/prompts/scoring.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    /// Idiomatic strategy.
    LowTranslationese,
    /// Literal strategy.
    HighTranslationese,
    Vanilla,
}

impl std::str::FromStr for PromptKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" | "low_translationese" => Ok(PromptKind::LowTranslationese),
            "high" | "high_translationese" => Ok(PromptKind::HighTranslationese),
            "vanilla" => Ok(PromptKind::Vanilla),
            other => Err(format!("unknown prompt kind {other:?}")),
        }
    }
}

/// A chat prompt used to synthesize translations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationPrompt {
    kind: PromptKind,
    template: PromptTemplate,
}

impl GenerationPrompt {
    /// The bundled template for `kind`.
    pub fn bundled(kind: PromptKind) -> Self {
        let text = match kind {
            PromptKind::LowTranslationese => LOW,
            PromptKind::HighTranslationese => HIGH,
            PromptKind::Vanilla => VANILLA,
        };
        Self { kind, template: PromptTemplate::new(text).expect("bundled prompts carry a placeholder") }
    }

    pub fn custom(kind: PromptKind, template: PromptTemplate) -> Self {
        Self { kind, template }
    }

    pub fn kind(&self) -> PromptKind {
        self.kind
    }

    pub fn render(&self, source: &str) -> String {
        self.template.render(source)
    }
}

/// Default prompt that conditions translation scoring on the source. It ends
/// with a newline so the first translation token starts a fresh token.
pub fn default_scoring_template() -> PromptTemplate {
    PromptTemplate::new(SCORING).expect("bundled scoring template carries a placeholder")
}
