//! Core sequence types shared across the pipeline.

use serde::{Deserialize, Serialize};

use crate::grammar::{CaseRole, GoldClause, NumberTag};
use crate::morphology::NuclearSuffix;

/// Reserved vocabulary symbols. Tokens shaped `<...>` embed through the
/// token table only (no lemma or character-ngram components).
pub const UNK_SYMBOL: &str = "<unk>";
pub const VERB_MASK_SYMBOL: &str = "<verb>";
pub const SG_MARK_SYMBOL: &str = "<sg>";
pub const PL_MARK_SYMBOL: &str = "<pl>";
pub const AMB_MARK_SYMBOL: &str = "<amb>";
/// Placeholder for unsuffixed words under the suffixes-only ablation.
pub const NO_SUFFIX_SYMBOL: &str = "<nosfx>";

pub const RESERVED_SYMBOLS: [&str; 5] = [
    UNK_SYMBOL,
    VERB_MASK_SYMBOL,
    SG_MARK_SYMBOL,
    PL_MARK_SYMBOL,
    AMB_MARK_SYMBOL,
];

/// Symbol standing in for a token under the suffixes-only ablation.
pub fn suffix_symbol(suffix: NuclearSuffix) -> &'static str {
    match suffix {
        NuclearSuffix::A => "<sfx:a>",
        NuclearSuffix::Ak => "<sfx:ak>",
        NuclearSuffix::Ek => "<sfx:ek>",
        NuclearSuffix::Ari => "<sfx:ari>",
        NuclearSuffix::Ei => "<sfx:ei>",
        NuclearSuffix::None => NO_SUFFIX_SYMBOL,
    }
}

pub fn is_reserved_symbol(surface: &str) -> bool {
    surface.starts_with('<') && surface.ends_with('>')
}

/// One token: surface form, lemma, verb flags, and gold morphology.
/// `pos` and `dep_label` come from annotated corpora (or the synthetic
/// generator) and are never fed to the embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub is_verb: bool,
    pub is_auxiliary: bool,
    pub nuclear: NuclearSuffix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_case: Option<CaseRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_number: Option<NumberTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_label: Option<String>,
    /// Raw case string from annotated corpora (16-way probing label);
    /// not part of the corpus JSONL format.
    #[serde(skip)]
    pub case_raw: Option<String>,
    /// Head index from annotated corpora (0 = root); not serialized.
    #[serde(skip)]
    pub head: Option<usize>,
}

impl Token {
    /// A plain word with no gold morphology.
    pub fn word(surface: &str, lemma: &str) -> Self {
        Token {
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            is_verb: false,
            is_auxiliary: false,
            nuclear: NuclearSuffix::None,
            gold_case: None,
            gold_number: None,
            pos: None,
            dep_label: None,
            case_raw: None,
            head: None,
        }
    }

    /// A reserved symbol token (lemma is the symbol itself).
    pub fn reserved(symbol: &str) -> Self {
        debug_assert!(is_reserved_symbol(symbol));
        Token::word(symbol, symbol)
    }

    pub fn is_reserved(&self) -> bool {
        is_reserved_symbol(&self.surface)
    }
}

/// A sentence, optionally with gold clause structure (synthetic corpora
/// always carry it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    #[serde(rename = "clauses", default, skip_serializing_if = "Option::is_none")]
    pub gold_clauses: Option<Vec<GoldClause>>,
}

impl Sentence {
    /// Structural checks: non-empty, auxiliary flags imply verb flags,
    /// clause anchors point at auxiliaries.
    pub fn validate(&self) -> crate::Result<()> {
        if self.tokens.is_empty() {
            return Err(crate::Error::InvalidInput(format!(
                "sentence {} has no tokens",
                self.id
            )));
        }
        for t in &self.tokens {
            if t.is_auxiliary && !t.is_verb {
                return Err(crate::Error::InvalidInput(format!(
                    "auxiliary token {:?} not flagged as verb in {}",
                    t.surface, self.id
                )));
            }
        }
        if let Some(clauses) = &self.gold_clauses {
            for c in clauses {
                match self.tokens.get(c.verb_index) {
                    Some(t) if t.is_auxiliary => {}
                    _ => {
                        return Err(crate::Error::InvalidInput(format!(
                            "clause verb index {} is not an auxiliary in {}",
                            c.verb_index, self.id
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_auxiliaries(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_auxiliary).count()
    }
}
