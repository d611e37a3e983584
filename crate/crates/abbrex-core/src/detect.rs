//! Abbreviation detection over tokenized documents.
//!
//! Three shape rules drive detection:
//! * abbreviation-shaped tokens (uppercase, 2-10 chars) are always mentions,
//!   even when absent from the knowledge base, so the evaluator can count
//!   out-of-vocabulary cases;
//! * short lowercase words that happen to be knowledge-base keys are
//!   mentions too, since clinical shorthand is often written lowercase;
//! * slash compounds split into components, each resolved independently.

use thiserror::Error;

use crate::corpus::TokenizedDocument;
use crate::kb::KnowledgeBase;
use crate::tokenize::{is_slash_compound, TokenKind};

/// Shape-rule thresholds. The defaults cover the usual ICU jargon; tighten
/// or relax via the pipeline config (`detect_*` keys).
#[derive(Debug, Clone)]
pub struct DetectorConfig {
    /// Char-length range accepted for abbreviation-shaped tokens.
    pub abbrev_min_len: usize,
    pub abbrev_max_len: usize,
    /// Minimum number of (uppercase) alphabetic chars in the shape.
    pub abbrev_min_alpha: usize,
    /// Char-length range for lowercase tokens checked against the KB.
    pub lowercase_kb_min_len: usize,
    pub lowercase_kb_max_len: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            abbrev_min_len: 2,
            abbrev_max_len: 10,
            abbrev_min_alpha: 2,
            lowercase_kb_min_len: 2,
            lowercase_kb_max_len: 4,
        }
    }
}

impl DetectorConfig {
    /// Second filter over tokens the tokenizer already labeled
    /// abbreviation-shaped, so the bounds can be tightened per run.
    fn accepts_abbrev(&self, surface: &str) -> bool {
        let len = surface.chars().count();
        let alpha = surface.chars().filter(|c| c.is_alphabetic()).count();
        (self.abbrev_min_len..=self.abbrev_max_len).contains(&len)
            && alpha >= self.abbrev_min_alpha
    }
}

/// One abbreviation occurrence. `components` has length 1 except for slash
/// compounds, where joining the components with `/` reproduces the surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbrevMention {
    pub doc_id: String,
    pub token_index: usize,
    pub surface: String,
    pub components: Vec<String>,
    pub in_kb: bool,
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("{surface:?} is not a slash compound")]
    NotSlashCompound { surface: String },
}

/// Split a slash compound into its component micro-abbreviations.
pub fn expand_slash_compound(surface: &str) -> Result<Vec<String>, DetectError> {
    if !is_slash_compound(surface) {
        return Err(DetectError::NotSlashCompound {
            surface: surface.to_string(),
        });
    }
    Ok(surface.split('/').map(|s| s.to_string()).collect())
}

/// Find every abbreviation mention in a tokenized document, in token order.
pub fn detect(doc: &TokenizedDocument, kb: &KnowledgeBase) -> Vec<AbbrevMention> {
    detect_with(doc, kb, &DetectorConfig::default())
}

pub fn detect_with(
    doc: &TokenizedDocument,
    kb: &KnowledgeBase,
    cfg: &DetectorConfig,
) -> Vec<AbbrevMention> {
    let mut mentions = Vec::new();
    for (idx, token) in doc.tokens.iter().enumerate() {
        let components = match token.kind {
            TokenKind::AbbrevShaped => {
                if !cfg.accepts_abbrev(&token.surface) {
                    continue;
                }
                vec![token.surface.clone()]
            }
            TokenKind::SlashCompound => expand_slash_compound(&token.surface)
                .expect("tokenizer only labels matching compounds"),
            TokenKind::Word => {
                let len = token.surface.chars().count();
                if len >= cfg.lowercase_kb_min_len
                    && len <= cfg.lowercase_kb_max_len
                    && kb.contains(&token.surface)
                {
                    vec![token.surface.clone()]
                } else {
                    continue;
                }
            }
            TokenKind::Punct => continue,
        };
        let in_kb = components.iter().all(|c| kb.contains(c));
        mentions.push(AbbrevMention {
            doc_id: doc.id.clone(),
            token_index: idx,
            surface: token.surface.clone(),
            components,
            in_kb,
        });
    }
    mentions
}
