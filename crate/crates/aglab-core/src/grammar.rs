//! Synthetic ergative-absolutive corpora with exact gold structure.
//!
//! The generator produces sentences whose clause structure is known
//! exactly: every auxiliary realizes a unique surface form for its
//! agreement pattern, every noun-phrase-final token carries the
//! determined nuclear suffix of its case/number cell, and gold
//! attachments record which verb governs which argument. That makes
//! both tasks solvable by deterministic oracles, which is what the
//! desk-scale verification leans on.
//!
//! Clause shape: argument NPs followed by a verb complex (non-finite
//! stem + conjugated auxiliary). NPs are `[number word] noun [adjective]`
//! with the suffix on the NP-final token. Transitive clauses may drop
//! the ergative NP while the auxiliary keeps its number, and shuffled
//! multi-clause sentences may front an argument across a clause
//! boundary, creating agreement-attractor configurations.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::datasets::{Sentence, Token};
use crate::morphology::{attach, suffix_for, LemmaLexicon, NuclearSuffix};
use crate::rng::{stream_seed, subseed};
use crate::{Error, Result};

/// Nuclear case role of a noun phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseRole {
    #[serde(rename = "erg")]
    Ergative,
    #[serde(rename = "abs")]
    Absolutive,
    #[serde(rename = "dat")]
    Dative,
}

impl CaseRole {
    pub const ALL: [CaseRole; 3] = [CaseRole::Ergative, CaseRole::Absolutive, CaseRole::Dative];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseRole::Ergative => "erg",
            CaseRole::Absolutive => "abs",
            CaseRole::Dative => "dat",
        }
    }
}

/// Grammatical number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumberTag {
    #[serde(rename = "sg")]
    Singular,
    #[serde(rename = "pl")]
    Plural,
}

impl NumberTag {
    pub fn as_str(self) -> &'static str {
        match self {
            NumberTag::Singular => "sg",
            NumberTag::Plural => "pl",
        }
    }
}

/// Per-role number agreement carried by an auxiliary. `None` means the
/// role is absent from the clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct AgreementTriple {
    pub erg: Option<NumberTag>,
    pub abs: Option<NumberTag>,
    pub dat: Option<NumberTag>,
}

impl AgreementTriple {
    pub fn new(erg: Option<NumberTag>, abs: Option<NumberTag>, dat: Option<NumberTag>) -> Self {
        Self { erg, abs, dat }
    }

    pub fn role(&self, role: CaseRole) -> Option<NumberTag> {
        match role {
            CaseRole::Ergative => self.erg,
            CaseRole::Absolutive => self.abs,
            CaseRole::Dative => self.dat,
        }
    }
}

/// Knobs of the synthetic grammar. All rates are probabilities in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarConfig {
    pub noun_lexicon_size: usize,
    /// Fraction of noun lemmas whose citation form ends in `a`.
    pub a_final_lemma_fraction: f64,
    /// Probability that a sentence contains a dative argument.
    pub dative_rate: f64,
    /// Probability that a transitive clause drops its ergative NP
    /// (the auxiliary still encodes its number).
    pub ergative_omission_rate: f64,
    pub transitive_rate: f64,
    /// Probability that a sentence has more than one clause.
    pub multi_clause_rate: f64,
    pub max_clauses: usize,
    /// Permute clause-internal argument order uniformly at random.
    pub word_order_shuffle: bool,
    pub seed: u64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        Self {
            noun_lexicon_size: 400,
            a_final_lemma_fraction: 0.30,
            dative_rate: 0.035,
            ergative_omission_rate: 0.55,
            transitive_rate: 0.50,
            multi_clause_rate: 0.30,
            max_clauses: 4,
            word_order_shuffle: true,
            seed: 0,
        }
    }
}

impl GrammarConfig {
    pub fn validate(&self) -> Result<()> {
        let ratios = [
            ("a_final_lemma_fraction", self.a_final_lemma_fraction),
            ("dative_rate", self.dative_rate),
            ("ergative_omission_rate", self.ergative_omission_rate),
            ("transitive_rate", self.transitive_rate),
            ("multi_clause_rate", self.multi_clause_rate),
        ];
        for (name, v) in ratios {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.noun_lexicon_size < 2 {
            return Err(Error::Config(format!(
                "noun_lexicon_size must be >= 2, got {}",
                self.noun_lexicon_size
            )));
        }
        if self.max_clauses < 1 {
            return Err(Error::Config("max_clauses must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gold clause structure: the auxiliary position, the attachment of
/// each surviving argument NP (position of the suffix-hosting token),
/// and transitivity. A transitive clause with no ergative attachment
/// had its ergative NP omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldClause {
    #[serde(rename = "verb")]
    pub verb_index: usize,
    #[serde(rename = "args")]
    pub argument_attachments: Vec<(usize, CaseRole, NumberTag)>,
    pub transitive: bool,
}

impl GoldClause {
    pub fn attachment(&self, role: CaseRole) -> Option<(usize, NumberTag)> {
        self.argument_attachments
            .iter()
            .find(|(_, c, _)| *c == role)
            .map(|(p, _, n)| (*p, *n))
    }

    /// The agreement triple this clause's auxiliary realizes. Needs off
    /// the omission record: an omitted ergative is not recoverable from
    /// attachments, so callers pass the aux-decoded triple for checks.
    pub fn surviving_triple(&self) -> AgreementTriple {
        AgreementTriple {
            erg: self.attachment(CaseRole::Ergative).map(|(_, n)| n),
            abs: self.attachment(CaseRole::Absolutive).map(|(_, n)| n),
            dat: self.attachment(CaseRole::Dative).map(|(_, n)| n),
        }
    }
}

// ---------------------------------------------------------------------------
// Auxiliary paradigm
// ---------------------------------------------------------------------------

// Fixed-width slot codes. Every form is transitivity + abs + dat + erg,
// two characters per slot, so distinct inputs can never collide.
const TRANS_CODE: [&str; 2] = ["di", "za"]; // transitive, intransitive
const ABS_CODE: [(&str, Option<NumberTag>); 3] = [
    ("tu", Some(NumberTag::Singular)),
    ("iz", Some(NumberTag::Plural)),
    ("ge", None),
];
const DAT_CODE: [(&str, Option<NumberTag>); 3] = [
    ("ko", Some(NumberTag::Singular)),
    ("ne", Some(NumberTag::Plural)),
    ("ba", None),
];
const ERG_CODE: [(&str, Option<NumberTag>); 3] = [
    ("gu", Some(NumberTag::Singular)),
    ("te", Some(NumberTag::Plural)),
    ("ri", None),
];

/// Lemma of the transitive auxiliary.
pub const AUX_LEMMA_TRANSITIVE: &str = "di";
/// Lemma of the intransitive auxiliary.
pub const AUX_LEMMA_INTRANSITIVE: &str = "za";

fn slot_code(table: &[(&'static str, Option<NumberTag>)], v: Option<NumberTag>) -> &'static str {
    table
        .iter()
        .find(|(_, n)| *n == v)
        .map(|(s, _)| *s)
        .expect("slot table covers all values")
}

fn decode_slot(
    table: &[(&'static str, Option<NumberTag>)],
    code: &str,
) -> Option<Option<NumberTag>> {
    table.iter().find(|(s, _)| *s == code).map(|(_, n)| *n)
}

/// The synthetic auxiliary surface form realizing an agreement pattern.
///
/// The paradigm is systematic: one unique form per valid combination of
/// transitivity and per-role numbers (36 in total). An ergative slot on
/// an intransitive input is rejected.
pub fn aux_form(transitive: bool, triple: &AgreementTriple) -> Result<String> {
    if !transitive && triple.erg.is_some() {
        return Err(Error::InvalidInput(
            "intransitive auxiliary cannot carry ergative agreement".into(),
        ));
    }
    let mut s = String::with_capacity(8);
    s.push_str(TRANS_CODE[if transitive { 0 } else { 1 }]);
    s.push_str(slot_code(&ABS_CODE, triple.abs));
    s.push_str(slot_code(&DAT_CODE, triple.dat));
    s.push_str(slot_code(&ERG_CODE, triple.erg));
    Ok(s)
}

/// Inverse of [`aux_form`]: decode an auxiliary surface back into its
/// transitivity and agreement triple.
pub fn oracle_agreement(aux_surface: &str) -> Result<(bool, AgreementTriple)> {
    let err = || Error::UnknownAux(aux_surface.to_string());
    if aux_surface.len() != 8 || !aux_surface.is_ascii() {
        return Err(err());
    }
    let transitive = match &aux_surface[0..2] {
        t if t == TRANS_CODE[0] => true,
        t if t == TRANS_CODE[1] => false,
        _ => return Err(err()),
    };
    let abs = decode_slot(&ABS_CODE, &aux_surface[2..4]).ok_or_else(err)?;
    let dat = decode_slot(&DAT_CODE, &aux_surface[4..6]).ok_or_else(err)?;
    let erg = decode_slot(&ERG_CODE, &aux_surface[6..8]).ok_or_else(err)?;
    if !transitive && erg.is_some() {
        return Err(err());
    }
    Ok((transitive, AgreementTriple { erg, abs, dat }))
}

/// Enumerate all 36 valid (transitivity, triple) combinations.
pub fn all_valid_aux_inputs() -> Vec<(bool, AgreementTriple)> {
    let slots = [Some(NumberTag::Singular), Some(NumberTag::Plural), None];
    let mut out = Vec::with_capacity(36);
    for &abs in &slots {
        for &dat in &slots {
            for &erg in &slots {
                out.push((true, AgreementTriple { erg, abs, dat }));
                if erg.is_none() {
                    out.push((false, AgreementTriple { erg, abs, dat }));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

// Generator constants. These are properties of the synthetic language,
// not reproduction targets: plural arguments are less common than
// singular ones, noun stems have lexical case preferences (standing in
// for animacy), and some NPs carry a number word, giving the learner
// the same kinds of cues the real corpora provide.
const P_PLURAL: f64 = 0.45;
const AFFINITY_P: f64 = 0.65;
const MODIFIER_P: f64 = 0.40;
const ADJECTIVE_P: f64 = 0.30;
/// In shuffled multi-clause sentences, the chance that an argument of a
/// later clause is fronted into an earlier clause's region (its own
/// verb stays final, so fronted arguments become agreement attractors).
const INTERLEAVE_P: f64 = 0.65;
const AGENTIVE_FRAC: f64 = 0.30;
const RECIPIENT_FRAC: f64 = 0.20;
const N_VERBS: usize = 12;
const SG_MODIFIER: &str = "bat";
const PL_MODIFIER: &str = "asko";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Affinity {
    Agentive,
    Patientive,
    Recipient,
}

#[derive(Debug, Clone)]
pub struct SynthLexicon {
    nouns: Vec<String>,
    adjectives: Vec<String>,
    verbs: Vec<(String, bool)>, // (stem, transitive)
    pub n_a_final_nouns: usize,
    agentive_idx: Vec<usize>,
    patientive_idx: Vec<usize>,
    recipient_idx: Vec<usize>,
}

const ONSETS: &[u8] = b"bdfgklmnprstxz";
const VOWELS: &[u8] = b"aeiou";
const VOWELS_NO_A: &[u8] = b"eiou";

fn gen_stem(rng: &mut ChaCha8Rng, a_final: bool, taken: &HashSet<String>) -> String {
    loop {
        let syllables = rng.random_range(2..=3usize);
        let mut stem = String::new();
        for i in 0..syllables {
            stem.push(ONSETS[rng.random_range(0..ONSETS.len())] as char);
            let last = i + 1 == syllables;
            let pool = if last {
                if a_final {
                    return_pool_a()
                } else {
                    VOWELS_NO_A
                }
            } else {
                VOWELS
            };
            stem.push(pool[rng.random_range(0..pool.len())] as char);
        }
        // Stems must not look suffixed; the only reachable collision for
        // consonant-vowel stems is an "ari" ending.
        if stem.ends_with("ari") {
            continue;
        }
        if taken.contains(&stem) {
            continue;
        }
        return stem;
    }
}

fn return_pool_a() -> &'static [u8] {
    b"a"
}

impl SynthLexicon {
    pub fn generate(config: &GrammarConfig) -> Self {
        let mut rng = crate::rng::substream(config.seed, "lexicon");
        let mut taken: HashSet<String> =
            [SG_MODIFIER.to_string(), PL_MODIFIER.to_string()].into();

        let n = config.noun_lexicon_size;
        let n_a_final = (config.a_final_lemma_fraction * n as f64).round() as usize;
        let mut nouns = Vec::with_capacity(n);
        for i in 0..n {
            let stem = gen_stem(&mut rng, i < n_a_final, &taken);
            taken.insert(stem.clone());
            nouns.push(stem);
        }
        nouns.shuffle(&mut rng);

        // Lexical case preferences, assigned independently of stem shape.
        let n_agentive = ((n as f64) * AGENTIVE_FRAC).round() as usize;
        let n_recipient = ((n as f64) * RECIPIENT_FRAC).round() as usize;
        let mut affinities = vec![Affinity::Patientive; n];
        for a in affinities.iter_mut().take(n_agentive) {
            *a = Affinity::Agentive;
        }
        for a in affinities
            .iter_mut()
            .skip(n_agentive)
            .take(n_recipient.min(n.saturating_sub(n_agentive)))
        {
            *a = Affinity::Recipient;
        }
        affinities.shuffle(&mut rng);

        let n_adj = (n / 10).max(6);
        let mut adjectives = Vec::with_capacity(n_adj);
        for _ in 0..n_adj {
            let stem = gen_stem(&mut rng, false, &taken);
            taken.insert(stem.clone());
            adjectives.push(stem);
        }

        let mut verbs = Vec::with_capacity(N_VERBS);
        for i in 0..N_VERBS {
            let mut stem = gen_stem(&mut rng, false, &taken);
            stem.push_str("tu");
            if taken.contains(&stem) {
                continue;
            }
            taken.insert(stem.clone());
            verbs.push((stem, i % 2 == 0));
        }

        let mut agentive_idx = Vec::new();
        let mut patientive_idx = Vec::new();
        let mut recipient_idx = Vec::new();
        for (i, a) in affinities.iter().enumerate() {
            match a {
                Affinity::Agentive => agentive_idx.push(i),
                Affinity::Patientive => patientive_idx.push(i),
                Affinity::Recipient => recipient_idx.push(i),
            }
        }
        // Degenerate tiny lexica: make sure every pool is non-empty.
        if agentive_idx.is_empty() {
            agentive_idx.push(0);
        }
        if patientive_idx.is_empty() {
            patientive_idx.push(n - 1);
        }
        if recipient_idx.is_empty() {
            recipient_idx.push(n / 2);
        }

        Self {
            nouns,
            adjectives,
            verbs,
            n_a_final_nouns: n_a_final,
            agentive_idx,
            patientive_idx,
            recipient_idx,
        }
    }

    /// The stem → lemma lookup for downstream segmentation (nouns and
    /// adjectives; verbs are never segmented).
    pub fn lemma_lexicon(&self) -> LemmaLexicon {
        let mut lex = LemmaLexicon::new();
        for s in &self.nouns {
            lex.insert(s, s);
        }
        for s in &self.adjectives {
            lex.insert(s, s);
        }
        lex
    }

    pub fn n_nouns(&self) -> usize {
        self.nouns.len()
    }

    fn pick_noun(&self, role: CaseRole, rng: &mut ChaCha8Rng) -> &str {
        let pool = if rng.random_bool(AFFINITY_P) {
            match role {
                CaseRole::Ergative => &self.agentive_idx,
                CaseRole::Absolutive => &self.patientive_idx,
                CaseRole::Dative => &self.recipient_idx,
            }
        } else {
            return &self.nouns[rng.random_range(0..self.nouns.len())];
        };
        &self.nouns[pool[rng.random_range(0..pool.len())]]
    }

    fn pick_verb(&self, transitive: bool, rng: &mut ChaCha8Rng) -> &str {
        let pool: Vec<&String> = self
            .verbs
            .iter()
            .filter(|(_, t)| *t == transitive)
            .map(|(s, _)| s)
            .collect();
        pool[rng.random_range(0..pool.len())]
    }
}

// ---------------------------------------------------------------------------
// Sentence generation
// ---------------------------------------------------------------------------

struct NpDraft {
    tokens: Vec<Token>,
    host_offset: usize,
    case: CaseRole,
    number: NumberTag,
    clause: usize,
}

enum Block {
    Np(NpDraft),
    Verb { clause: usize, tokens: Vec<Token> },
}

fn noun_token(stem: &str, host: Option<(CaseRole, NumberTag)>, pos: &str) -> Token {
    match host {
        Some((case, number)) => {
            let sfx = suffix_for(case, number);
            Token {
                surface: attach(stem, sfx),
                lemma: stem.to_string(),
                is_verb: false,
                is_auxiliary: false,
                nuclear: sfx,
                gold_case: Some(case),
                gold_number: Some(number),
                pos: Some(pos.to_string()),
                dep_label: None,
                case_raw: None,
                head: None,
            }
        }
        None => Token {
            surface: stem.to_string(),
            lemma: stem.to_string(),
            is_verb: false,
            is_auxiliary: false,
            nuclear: NuclearSuffix::None,
            gold_case: None,
            gold_number: None,
            pos: Some(pos.to_string()),
            dep_label: None,
            case_raw: None,
            head: None,
        },
    }
}

fn make_np(
    lex: &SynthLexicon,
    case: CaseRole,
    number: NumberTag,
    clause: usize,
    rng: &mut ChaCha8Rng,
) -> NpDraft {
    let stem = lex.pick_noun(case, rng).to_string();
    let with_modifier = rng.random_bool(MODIFIER_P);
    let with_adjective = rng.random_bool(ADJECTIVE_P);
    let mut tokens = Vec::with_capacity(3);
    if with_modifier {
        let m = match number {
            NumberTag::Singular => SG_MODIFIER,
            NumberTag::Plural => PL_MODIFIER,
        };
        tokens.push(noun_token(m, None, "num"));
    }
    if with_adjective {
        tokens.push(noun_token(&stem, None, "n"));
        let adj = &lex.adjectives[rng.random_range(0..lex.adjectives.len())];
        tokens.push(noun_token(adj, Some((case, number)), "adj"));
    } else {
        tokens.push(noun_token(&stem, Some((case, number)), "n"));
    }
    let host_offset = tokens.len() - 1;
    NpDraft {
        tokens,
        host_offset,
        case,
        number,
        clause,
    }
}

fn sample_number(rng: &mut ChaCha8Rng) -> NumberTag {
    if rng.random_bool(P_PLURAL) {
        NumberTag::Plural
    } else {
        NumberTag::Singular
    }
}

fn generate_sentence(
    index: usize,
    config: &GrammarConfig,
    lex: &SynthLexicon,
    corpus_seed: u64,
) -> Sentence {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(corpus_seed, index as u64));

    let n_clauses = if config.max_clauses >= 2 && rng.random_bool(config.multi_clause_rate) {
        rng.random_range(2..=config.max_clauses)
    } else {
        1
    };
    let has_dative = rng.random_bool(config.dative_rate);
    let dative_clause = if has_dative {
        rng.random_range(0..n_clauses)
    } else {
        usize::MAX
    };

    let mut clause_nps: Vec<Vec<NpDraft>> = Vec::with_capacity(n_clauses);
    let mut clause_verbs: Vec<Vec<Token>> = Vec::with_capacity(n_clauses);

    for clause in 0..n_clauses {
        let transitive = rng.random_bool(config.transitive_rate);
        let abs_num = sample_number(&mut rng);
        let erg_num = if transitive {
            Some(sample_number(&mut rng))
        } else {
            None
        };
        let dat_num = if clause == dative_clause {
            Some(sample_number(&mut rng))
        } else {
            None
        };
        let omit_erg = transitive && rng.random_bool(config.ergative_omission_rate);

        let mut nps: Vec<NpDraft> = Vec::with_capacity(3);
        if let Some(n) = erg_num {
            if !omit_erg {
                nps.push(make_np(lex, CaseRole::Ergative, n, clause, &mut rng));
            }
        }
        if let Some(n) = dat_num {
            nps.push(make_np(lex, CaseRole::Dative, n, clause, &mut rng));
        }
        nps.push(make_np(lex, CaseRole::Absolutive, abs_num, clause, &mut rng));
        if config.word_order_shuffle {
            nps.shuffle(&mut rng);
        }

        let triple = AgreementTriple::new(erg_num, Some(abs_num), dat_num);
        let verb_stem = lex.pick_verb(transitive, &mut rng).to_string();
        let aux_surface = aux_form(transitive, &triple).expect("generated triple is valid");
        let aux_lemma = if transitive {
            AUX_LEMMA_TRANSITIVE
        } else {
            AUX_LEMMA_INTRANSITIVE
        };
        let verb_tokens = vec![
            Token {
                surface: verb_stem.clone(),
                lemma: verb_stem,
                is_verb: true,
                is_auxiliary: false,
                nuclear: NuclearSuffix::None,
                gold_case: None,
                gold_number: None,
                pos: Some("v".into()),
                dep_label: None,
                case_raw: None,
                head: None,
            },
            Token {
                surface: aux_surface,
                lemma: aux_lemma.to_string(),
                is_verb: true,
                is_auxiliary: true,
                nuclear: NuclearSuffix::None,
                gold_case: None,
                gold_number: None,
                pos: Some("aux".into()),
                dep_label: None,
                case_raw: None,
                head: None,
            },
        ];

        clause_nps.push(nps);
        clause_verbs.push(verb_tokens);
    }

    // Assemble regions. Each clause stays verb-final, but in shuffled
    // multi-clause sentences an argument of a later clause may be
    // fronted into an earlier region, putting it next to a verb that
    // does not govern it.
    let mut regions: Vec<Vec<NpDraft>> = Vec::with_capacity(n_clauses);
    for (clause, nps) in clause_nps.into_iter().enumerate() {
        regions.push(Vec::new());
        for np in nps {
            let interleave =
                config.word_order_shuffle && clause > 0 && rng.random_bool(INTERLEAVE_P);
            let target = if interleave {
                rng.random_range(0..clause)
            } else {
                clause
            };
            regions[target].push(np);
        }
    }

    let mut blocks: Vec<Block> = Vec::new();
    for (clause, mut nps) in regions.into_iter().enumerate() {
        if config.word_order_shuffle {
            nps.shuffle(&mut rng);
        }
        for np in nps {
            blocks.push(Block::Np(np));
        }
        blocks.push(Block::Verb {
            clause,
            tokens: std::mem::take(&mut clause_verbs[clause]),
        });
    }

    let mut tokens: Vec<Token> = Vec::new();
    let mut attachments: Vec<Vec<(usize, CaseRole, NumberTag)>> = vec![Vec::new(); n_clauses];
    let mut verb_index: Vec<usize> = vec![0; n_clauses];
    let mut transitivity: Vec<bool> = vec![false; n_clauses];
    for block in blocks {
        match block {
            Block::Np(np) => {
                let host = tokens.len() + np.host_offset;
                attachments[np.clause].push((host, np.case, np.number));
                tokens.extend(np.tokens);
            }
            Block::Verb { clause, tokens: vt } => {
                // stem then auxiliary; the auxiliary is the clause anchor
                verb_index[clause] = tokens.len() + 1;
                transitivity[clause] =
                    oracle_agreement(&vt[1].surface).expect("own paradigm decodes").0;
                tokens.extend(vt);
            }
        }
    }

    let clauses: Vec<GoldClause> = (0..n_clauses)
        .map(|c| {
            let mut args = attachments[c].clone();
            args.sort_by_key(|(p, _, _)| *p);
            GoldClause {
                verb_index: verb_index[c],
                argument_attachments: args,
                transitive: transitivity[c],
            }
        })
        .collect();

    Sentence {
        id: format!("s{index:07}"),
        tokens,
        gold_clauses: Some(clauses),
    }
}

/// A generated corpus together with the lexicon that produced it.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub lexicon: LemmaLexicon,
    pub n_nouns: usize,
    pub n_a_final_nouns: usize,
}

/// Generate `n_sentences` sentences. Deterministic given the config
/// seed; each sentence derives its own sub-seed from (seed, index), so
/// generation parallelizes with order-stable output.
pub fn generate_corpus(config: &GrammarConfig, n_sentences: usize) -> Result<Corpus> {
    config.validate()?;
    let lex = SynthLexicon::generate(config);
    let corpus_seed = stream_seed(config.seed, "corpus");
    let sentences = crate::par::ordered_map_range(n_sentences, |i| {
        generate_sentence(i, config, &lex, corpus_seed)
    });
    Ok(Corpus {
        sentences,
        lexicon: lex.lemma_lexicon(),
        n_nouns: lex.n_nouns(),
        n_a_final_nouns: lex.n_a_final_nouns,
    })
}

/// Sequential twin of [`generate_corpus`], for benchmarking the
/// parallel path against a like-for-like baseline.
pub fn generate_corpus_sequential(config: &GrammarConfig, n_sentences: usize) -> Result<Corpus> {
    config.validate()?;
    let lex = SynthLexicon::generate(config);
    let corpus_seed = stream_seed(config.seed, "corpus");
    let sentences = crate::par::seq::ordered_map_range(n_sentences, |i| {
        generate_sentence(i, config, &lex, corpus_seed)
    });
    Ok(Corpus {
        sentences,
        lexicon: lex.lemma_lexicon(),
        n_nouns: lex.n_nouns(),
        n_a_final_nouns: lex.n_a_final_nouns,
    })
}

/// Per-token suffix labels determined by gold structure: each attached
/// token gets the unique suffix of its case/number cell, everything
/// else gets `None`. This is the deterministic solution of the suffix
/// task on synthetic data.
pub fn oracle_suffix(sentence: &Sentence, clauses: &[GoldClause]) -> Result<Vec<NuclearSuffix>> {
    let mut labels = vec![NuclearSuffix::None; sentence.tokens.len()];
    for clause in clauses {
        for &(pos, case, number) in &clause.argument_attachments {
            let token = sentence.tokens.get(pos).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "attachment position {pos} out of bounds in {}",
                    sentence.id
                ))
            })?;
            if token.is_verb {
                return Err(Error::InvalidInput(format!(
                    "attachment to a verb token at position {pos} in {}",
                    sentence.id
                )));
            }
            labels[pos] = suffix_for(case, number);
        }
    }
    Ok(labels)
}

/// Index of the clause whose verb is nearest to `pos` by token
/// distance; the earlier verb wins ties.
pub fn nearest_clause(clauses: &[GoldClause], pos: usize) -> Option<usize> {
    clauses
        .iter()
        .enumerate()
        .map(|(ci, c)| (c.verb_index.abs_diff(pos), c.verb_index, ci))
        .min()
        .map(|(_, _, ci)| ci)
}

/// Index of the clause that has an attachment at `pos`, if any.
pub fn governing_clause(clauses: &[GoldClause], pos: usize) -> Option<usize> {
    clauses.iter().position(|c| {
        c.argument_attachments
            .iter()
            .any(|&(p, _, _)| p == pos)
    })
}

/// Empirical corpus statistics (the sidecar emitted next to generated
/// corpora).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_sentences: usize,
    pub n_tokens: usize,
    pub dative_sentence_rate: f64,
    pub ergative_omission_rate: f64,
    pub ak_token_density: f64,
    pub a_final_lemma_rate: f64,
    pub multi_clause_sentence_rate: f64,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut n_tokens = 0usize;
    let mut n_dative = 0usize;
    let mut n_multi = 0usize;
    let mut n_transitive = 0usize;
    let mut n_omitted = 0usize;
    let mut n_ak = 0usize;
    for s in &corpus.sentences {
        n_tokens += s.tokens.len();
        n_ak += s
            .tokens
            .iter()
            .filter(|t| t.nuclear == NuclearSuffix::Ak)
            .count();
        if let Some(clauses) = &s.gold_clauses {
            if clauses.len() > 1 {
                n_multi += 1;
            }
            if clauses.iter().any(|c| {
                c.argument_attachments
                    .iter()
                    .any(|(_, case, _)| *case == CaseRole::Dative)
            }) {
                n_dative += 1;
            }
            for c in clauses {
                if c.transitive {
                    n_transitive += 1;
                    if c.attachment(CaseRole::Ergative).is_none() {
                        n_omitted += 1;
                    }
                }
            }
        }
    }
    let n = corpus.sentences.len().max(1);
    CorpusStats {
        n_sentences: corpus.sentences.len(),
        n_tokens,
        dative_sentence_rate: n_dative as f64 / n as f64,
        ergative_omission_rate: n_omitted as f64 / n_transitive.max(1) as f64,
        ak_token_density: n_ak as f64 / n_tokens.max(1) as f64,
        a_final_lemma_rate: corpus.n_a_final_nouns as f64 / corpus.n_nouns.max(1) as f64,
        multi_clause_sentence_rate: n_multi as f64 / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn aux_form_realizes_the_worked_examples() {
        // erg.pl + abs.pl + dat.sg, transitive
        let t = AgreementTriple::new(
            Some(NumberTag::Plural),
            Some(NumberTag::Plural),
            Some(NumberTag::Singular),
        );
        assert_eq!(aux_form(true, &t).unwrap(), "diizkote");
        // intransitive plural absolutive
        let t2 = AgreementTriple::new(None, Some(NumberTag::Plural), None);
        let intr = aux_form(false, &t2).unwrap();
        assert_ne!(intr, aux_form(true, &t2).unwrap());
    }

    #[test]
    fn aux_form_rejects_ergative_on_intransitive() {
        let t = AgreementTriple::new(Some(NumberTag::Plural), Some(NumberTag::Singular), None);
        assert!(aux_form(false, &t).is_err());
    }

    #[test]
    fn aux_form_is_injective_over_all_36_inputs() {
        let inputs = all_valid_aux_inputs();
        assert_eq!(inputs.len(), 36);
        let mut seen: HashMap<String, (bool, AgreementTriple)> = HashMap::new();
        for (t, triple) in inputs {
            let form = aux_form(t, &triple).unwrap();
            if let Some(prev) = seen.insert(form.clone(), (t, triple)) {
                panic!("collision: {form} from {prev:?} and {:?}", (t, triple));
            }
        }
        assert_eq!(seen.len(), 36);
    }

    #[test]
    fn oracle_agreement_inverts_aux_form() {
        for (t, triple) in all_valid_aux_inputs() {
            let form = aux_form(t, &triple).unwrap();
            assert_eq!(oracle_agreement(&form).unwrap(), (t, triple));
        }
        assert!(oracle_agreement("xyz").is_err());
        assert!(oracle_agreement("zaizbagu").is_err()); // intransitive + erg slot
    }

    #[test]
    fn corpus_is_deterministic() {
        let cfg = GrammarConfig {
            noun_lexicon_size: 30,
            seed: 11,
            ..GrammarConfig::default()
        };
        let a = generate_corpus(&cfg, 50).unwrap();
        let b = generate_corpus(&cfg, 50).unwrap();
        assert_eq!(a.sentences, b.sentences);
    }

    #[test]
    fn parallel_and_sequential_generation_agree() {
        let cfg = GrammarConfig {
            noun_lexicon_size: 30,
            seed: 3,
            ..GrammarConfig::default()
        };
        let a = generate_corpus(&cfg, 40).unwrap();
        let b = generate_corpus_sequential(&cfg, 40).unwrap();
        assert_eq!(a.sentences, b.sentences);
    }

    #[test]
    fn single_clause_when_multi_rate_zero() {
        let cfg = GrammarConfig {
            multi_clause_rate: 0.0,
            noun_lexicon_size: 20,
            seed: 5,
            ..GrammarConfig::default()
        };
        let corpus = generate_corpus(&cfg, 200).unwrap();
        for s in &corpus.sentences {
            assert_eq!(s.gold_clauses.as_ref().unwrap().len(), 1);
        }
    }

    #[test]
    fn every_aux_matches_its_gold_triple() {
        let cfg = GrammarConfig {
            noun_lexicon_size: 40,
            seed: 17,
            ..GrammarConfig::default()
        };
        let corpus = generate_corpus(&cfg, 300).unwrap();
        for s in &corpus.sentences {
            for clause in s.gold_clauses.as_ref().unwrap() {
                let aux = &s.tokens[clause.verb_index];
                assert!(aux.is_auxiliary);
                let (transitive, triple) = oracle_agreement(&aux.surface).unwrap();
                assert_eq!(transitive, clause.transitive);
                // surviving attachments must agree with the aux triple
                for &(pos, case, number) in &clause.argument_attachments {
                    assert_eq!(triple.role(case), Some(number));
                    assert_eq!(s.tokens[pos].nuclear, suffix_for(case, number));
                }
                // absolutive is always present as an NP
                assert!(clause.attachment(CaseRole::Absolutive).is_some());
            }
        }
    }

    #[test]
    fn no_intransitive_clause_has_an_ergative_np() {
        let cfg = GrammarConfig {
            noun_lexicon_size: 60,
            seed: 23,
            ..GrammarConfig::default()
        };
        let corpus = generate_corpus(&cfg, 10_000).unwrap();
        for s in &corpus.sentences {
            for clause in s.gold_clauses.as_ref().unwrap() {
                if !clause.transitive {
                    assert!(
                        clause.attachment(CaseRole::Ergative).is_none(),
                        "intransitive clause with ergative NP in {}",
                        s.id
                    );
                }
            }
        }
    }

    #[test]
    fn oracle_suffix_matches_gold_nuclear_fields() {
        let cfg = GrammarConfig {
            noun_lexicon_size: 40,
            seed: 29,
            ..GrammarConfig::default()
        };
        let corpus = generate_corpus(&cfg, 500).unwrap();
        for s in &corpus.sentences {
            let labels = oracle_suffix(s, s.gold_clauses.as_ref().unwrap()).unwrap();
            for (tok, lab) in s.tokens.iter().zip(&labels) {
                assert_eq!(tok.nuclear, *lab, "in {}", s.id);
            }
        }
    }

    #[test]
    fn oracle_suffix_rejects_attachment_to_verb() {
        let cfg = GrammarConfig {
            noun_lexicon_size: 20,
            seed: 31,
            ..GrammarConfig::default()
        };
        let corpus = generate_corpus(&cfg, 5).unwrap();
        let s = &corpus.sentences[0];
        let mut clauses = s.gold_clauses.clone().unwrap();
        let verb_pos = clauses[0].verb_index;
        clauses[0]
            .argument_attachments
            .push((verb_pos, CaseRole::Absolutive, NumberTag::Singular));
        assert!(oracle_suffix(s, &clauses).is_err());
    }

    #[test]
    fn multi_clause_sentences_have_at_least_two_verbs() {
        let cfg = GrammarConfig {
            multi_clause_rate: 1.0,
            max_clauses: 3,
            noun_lexicon_size: 30,
            seed: 37,
            ..GrammarConfig::default()
        };
        let corpus = generate_corpus(&cfg, 100).unwrap();
        for s in &corpus.sentences {
            let n_aux = s.tokens.iter().filter(|t| t.is_auxiliary).count();
            assert!(n_aux >= 2, "{}", s.id);
            assert_eq!(n_aux, s.gold_clauses.as_ref().unwrap().len());
        }
    }

    #[test]
    fn config_validation_catches_bad_ratios() {
        let cfg = GrammarConfig {
            dative_rate: 1.5,
            ..GrammarConfig::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("dative_rate"), "{err}");
        let cfg = GrammarConfig {
            noun_lexicon_size: 1,
            ..GrammarConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
