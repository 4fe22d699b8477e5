//! Task instance builders and the ablation transforms.
//!
//! Verb task: one auxiliary per sentence is replaced by `<verb>` and
//! the model predicts the number of its ergative, absolutive and
//! dative arguments. Suffix task: nuclear suffixes are stripped from
//! NPs (rendered in the bare determined citation form, stem + `-a`)
//! while verbs keep their original forms, and the model recovers the
//! suffix (or its absence) per token.

use serde::{Deserialize, Serialize};

use super::types::{suffix_symbol, Sentence, Token, VERB_MASK_SYMBOL};
use crate::grammar::{oracle_agreement, AgreementTriple, GoldClause};
use crate::morphology::{attach, neutralize, segment, LemmaLexicon, NuclearSuffix, Segmentation};
use crate::rng::{keyed_rng, stream_seed};
use crate::{Error, Result};
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbTaskInstance {
    pub source_id: String,
    pub input_tokens: Vec<Token>,
    pub mask_index: usize,
    pub label: AgreementTriple,
}

impl VerbTaskInstance {
    pub fn n_auxiliaries(&self) -> usize {
        self.input_tokens.iter().filter(|t| t.is_auxiliary).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixTaskInstance {
    pub source_id: String,
    pub input_tokens: Vec<Token>,
    pub labels: Vec<NuclearSuffix>,
    pub eligible: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_clauses: Option<Vec<GoldClause>>,
}

impl SuffixTaskInstance {
    pub fn n_auxiliaries(&self) -> usize {
        self.input_tokens.iter().filter(|t| t.is_auxiliary).count()
    }
}

/// Verb-task build result; sentences without a decodable auxiliary are
/// skipped and counted rather than failing the build.
#[derive(Debug, Clone)]
pub struct VerbTaskBuild {
    pub instances: Vec<VerbTaskInstance>,
    pub skipped: usize,
}

/// Build one verb-task instance per sentence. The masked auxiliary is
/// chosen uniformly using a per-sentence generator keyed on
/// (seed, sentence id), so the choice survives resplits and parallel
/// builds.
pub fn build_verb_task(sentences: &[Sentence], seed: u64) -> VerbTaskBuild {
    let mask_seed = stream_seed(seed, "mask");
    let built = crate::par::ordered_map(sentences, |s| build_verb_instance(s, mask_seed));
    let mut instances = Vec::with_capacity(built.len());
    let mut skipped = 0usize;
    for b in built {
        match b {
            Some(inst) => instances.push(inst),
            None => skipped += 1,
        }
    }
    VerbTaskBuild { instances, skipped }
}

fn build_verb_instance(sentence: &Sentence, mask_seed: u64) -> Option<VerbTaskInstance> {
    let auxes: Vec<(usize, AgreementTriple)> = sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_auxiliary)
        .filter_map(|(i, t)| oracle_agreement(&t.surface).ok().map(|(_, tr)| (i, tr)))
        .collect();
    if auxes.is_empty() {
        return None;
    }
    let mut rng = keyed_rng(mask_seed, &sentence.id);
    let (mask_index, label) = auxes[rng.random_range(0..auxes.len())];
    let mut input_tokens = sentence.tokens.clone();
    let mut masked = Token::reserved(VERB_MASK_SYMBOL);
    masked.is_verb = true;
    masked.is_auxiliary = true;
    input_tokens[mask_index] = masked;
    Some(VerbTaskInstance {
        source_id: sentence.id.clone(),
        input_tokens,
        mask_index,
        label,
    })
}

/// The bare determined citation rendering of a suffix-hosting word
/// (stem + singular absolutive `-a`).
fn citation_form(stem: &str) -> String {
    attach(stem, NuclearSuffix::A)
}

/// Build one suffix-task instance per sentence: NP suffixes stripped to
/// citation forms, verbs untouched, unresolvable `-a`-final words kept
/// in the input but excluded from the labels.
pub fn build_suffix_task(sentences: &[Sentence], lexicon: &LemmaLexicon) -> Vec<SuffixTaskInstance> {
    crate::par::ordered_map(sentences, |s| build_suffix_instance(s, lexicon))
}

fn build_suffix_instance(sentence: &Sentence, lexicon: &LemmaLexicon) -> SuffixTaskInstance {
    let n = sentence.tokens.len();
    let mut input_tokens = Vec::with_capacity(n);
    let mut labels = vec![NuclearSuffix::None; n];
    let mut eligible = vec![true; n];
    for (i, tok) in sentence.tokens.iter().enumerate() {
        if tok.is_verb || tok.is_reserved() {
            input_tokens.push(tok.clone());
            continue;
        }
        match segment(&tok.surface, lexicon) {
            Segmentation::Split { suffix, .. } if suffix.is_none() => {
                input_tokens.push(tok.clone());
            }
            Segmentation::Split { stem, suffix } => {
                let mut stripped = tok.clone();
                stripped.surface = citation_form(&stem);
                labels[i] = suffix;
                input_tokens.push(stripped);
            }
            Segmentation::Unknown => {
                eligible[i] = false;
                input_tokens.push(tok.clone());
            }
        }
    }
    SuffixTaskInstance {
        source_id: sentence.id.clone(),
        input_tokens,
        labels,
        eligible,
        gold_clauses: sentence.gold_clauses.clone(),
    }
}

/// Dataset transforms mirroring the reported ablation rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    /// Replace every word by its bare nuclear-suffix symbol.
    SuffixesOnly,
    /// Strip every NP to its citation form.
    NoSuffixes,
    /// Replace suffixes by number markers (`<sg>`, `<pl>`, `<amb>`).
    NeutralizedCase,
    /// Keep only instances whose source sentence has exactly one verb.
    SingleVerbFilter,
    /// Drop sentences containing any `-ak`-suffixed word.
    NoAkFilter,
    /// Suffix task only: replace every verb surface by `<verb>`.
    NoVerb,
}

impl AblationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::SuffixesOnly => "suffixes-only",
            AblationMode::NoSuffixes => "no-suffixes",
            AblationMode::NeutralizedCase => "neutralized-case",
            AblationMode::SingleVerbFilter => "single-verb",
            AblationMode::NoAkFilter => "no-ak",
            AblationMode::NoVerb => "no-verb",
        }
    }
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suffixes-only" => Ok(AblationMode::SuffixesOnly),
            "no-suffixes" => Ok(AblationMode::NoSuffixes),
            "neutralized-case" => Ok(AblationMode::NeutralizedCase),
            "single-verb" => Ok(AblationMode::SingleVerbFilter),
            "no-ak" => Ok(AblationMode::NoAkFilter),
            "no-verb" => Ok(AblationMode::NoVerb),
            _ => Err(Error::Config(format!("unknown ablation mode {s:?}"))),
        }
    }
}

fn suffixes_only_token(tok: &Token, lexicon: &LemmaLexicon) -> Token {
    if tok.is_reserved() {
        return tok.clone();
    }
    let sfx = match segment(&tok.surface, lexicon) {
        Segmentation::Split { suffix, .. } => suffix,
        Segmentation::Unknown => NuclearSuffix::None,
    };
    let mut out = Token::reserved(suffix_symbol(sfx));
    out.is_verb = tok.is_verb;
    out.is_auxiliary = tok.is_auxiliary;
    out.nuclear = tok.nuclear;
    out.gold_case = tok.gold_case;
    out.gold_number = tok.gold_number;
    out
}

fn no_suffixes_token(tok: &Token, lexicon: &LemmaLexicon) -> Token {
    if tok.is_verb || tok.is_reserved() {
        return tok.clone();
    }
    match segment(&tok.surface, lexicon) {
        Segmentation::Split { stem, suffix } if !suffix.is_none() => {
            let mut out = tok.clone();
            out.surface = citation_form(&stem);
            out
        }
        _ => tok.clone(),
    }
}

fn neutralized_token(tok: &Token, lexicon: &LemmaLexicon) -> Token {
    if tok.is_verb || tok.is_reserved() {
        return tok.clone();
    }
    let mut out = tok.clone();
    out.surface = neutralize(&tok.surface, lexicon);
    out
}

/// Apply an ablation to verb-task instances. `NoVerb` is rejected here:
/// it would collide with the prediction mask.
pub fn apply_ablation_verb(
    instances: Vec<VerbTaskInstance>,
    mode: AblationMode,
    lexicon: &LemmaLexicon,
) -> Result<Vec<VerbTaskInstance>> {
    match mode {
        AblationMode::NoVerb => Err(Error::InvalidInput(
            "the no-verb ablation applies only to the suffix task".into(),
        )),
        AblationMode::SingleVerbFilter => Ok(instances
            .into_iter()
            .filter(|i| i.n_auxiliaries() == 1)
            .collect()),
        AblationMode::NoAkFilter => Ok(instances
            .into_iter()
            .filter(|i| i.input_tokens.iter().all(|t| t.nuclear != NuclearSuffix::Ak))
            .collect()),
        AblationMode::SuffixesOnly => Ok(instances
            .into_iter()
            .map(|mut inst| {
                inst.input_tokens = inst
                    .input_tokens
                    .iter()
                    .map(|t| suffixes_only_token(t, lexicon))
                    .collect();
                inst
            })
            .collect()),
        AblationMode::NoSuffixes => Ok(instances
            .into_iter()
            .map(|mut inst| {
                inst.input_tokens = inst
                    .input_tokens
                    .iter()
                    .map(|t| no_suffixes_token(t, lexicon))
                    .collect();
                inst
            })
            .collect()),
        AblationMode::NeutralizedCase => Ok(instances
            .into_iter()
            .map(|mut inst| {
                inst.input_tokens = inst
                    .input_tokens
                    .iter()
                    .map(|t| neutralized_token(t, lexicon))
                    .collect();
                inst
            })
            .collect()),
    }
}

/// Apply an ablation to suffix-task instances.
pub fn apply_ablation_suffix(
    instances: Vec<SuffixTaskInstance>,
    mode: AblationMode,
    lexicon: &LemmaLexicon,
) -> Result<Vec<SuffixTaskInstance>> {
    match mode {
        AblationMode::NoVerb => Ok(instances
            .into_iter()
            .map(|mut inst| {
                inst.input_tokens = inst
                    .input_tokens
                    .iter()
                    .map(|t| {
                        if t.is_verb {
                            let mut masked = Token::reserved(VERB_MASK_SYMBOL);
                            masked.is_verb = true;
                            masked.is_auxiliary = t.is_auxiliary;
                            masked
                        } else {
                            t.clone()
                        }
                    })
                    .collect();
                inst
            })
            .collect()),
        AblationMode::SingleVerbFilter => Ok(instances
            .into_iter()
            .filter(|i| i.n_auxiliaries() == 1)
            .collect()),
        AblationMode::NoAkFilter => Ok(instances
            .into_iter()
            .filter(|i| i.labels.iter().all(|l| *l != NuclearSuffix::Ak))
            .collect()),
        AblationMode::SuffixesOnly | AblationMode::NoSuffixes | AblationMode::NeutralizedCase => {
            Ok(instances
                .into_iter()
                .map(|mut inst| {
                    inst.input_tokens = inst
                        .input_tokens
                        .iter()
                        .map(|t| match mode {
                            AblationMode::SuffixesOnly => suffixes_only_token(t, lexicon),
                            AblationMode::NoSuffixes => no_suffixes_token(t, lexicon),
                            _ => neutralized_token(t, lexicon),
                        })
                        .collect();
                    inst
                })
                .collect())
        }
    }
}
