//! The nuclear-case suffix system: segmentation, attachment, and
//! number-neutralized rewriting.
//!
//! Determined nuclear suffixes and the case/number cells they realize:
//!
//! | Case       | Sg     | Pl    |
//! |------------|--------|-------|
//! | Absolutive | `-a`   | `-ak` |
//! | Ergative   | `-ak`  | `-ek` |
//! | Dative     | `-ari` | `-ei` |
//!
//! `-ak` is syncretic: it marks both the plural absolutive and the
//! singular ergative. Segmentation is longest-match over the suffix
//! forms; `-a`-final words additionally consult a [`LemmaLexicon`]
//! because `-a` can be part of the lemma itself (*uda* 'summer') rather
//! than a suffix (*ura* = *ur* + `-a`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grammar::{CaseRole, NumberTag};
use crate::{Error, Result};

/// A determined nuclear case suffix, or its absence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuclearSuffix {
    A,
    Ak,
    Ek,
    Ari,
    Ei,
    None,
}

impl NuclearSuffix {
    /// The five suffix-bearing variants, in fixed class order.
    pub const CLASSES: [NuclearSuffix; 5] = [
        NuclearSuffix::A,
        NuclearSuffix::Ak,
        NuclearSuffix::Ek,
        NuclearSuffix::Ari,
        NuclearSuffix::Ei,
    ];

    /// All six variants in fixed class order (prediction tie-break order).
    pub const ALL: [NuclearSuffix; 6] = [
        NuclearSuffix::A,
        NuclearSuffix::Ak,
        NuclearSuffix::Ek,
        NuclearSuffix::Ari,
        NuclearSuffix::Ei,
        NuclearSuffix::None,
    ];

    /// Surface string of the suffix ("" for `None`).
    pub fn as_str(self) -> &'static str {
        match self {
            NuclearSuffix::A => "a",
            NuclearSuffix::Ak => "ak",
            NuclearSuffix::Ek => "ek",
            NuclearSuffix::Ari => "ari",
            NuclearSuffix::Ei => "ei",
            NuclearSuffix::None => "",
        }
    }

    pub fn is_none(self) -> bool {
        self == NuclearSuffix::None
    }
}

impl fmt::Display for NuclearSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            write!(f, "none")
        } else {
            write!(f, "-{}", self.as_str())
        }
    }
}

/// Number markers used by the neutralized-case rewriting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NumberMarker {
    SgMark,
    PlMark,
    AmbMark,
}

impl NumberMarker {
    pub fn as_str(self) -> &'static str {
        match self {
            NumberMarker::SgMark => "<sg>",
            NumberMarker::PlMark => "<pl>",
            NumberMarker::AmbMark => "<amb>",
        }
    }
}

/// Lemma lookup backing `-a` disambiguation.
///
/// `entries` maps surface stems to lemmas; `a_final` holds the lemmas
/// whose citation form itself ends in `a`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaLexicon {
    entries: BTreeMap<String, String>,
    a_final: BTreeSet<String>,
}

impl LemmaLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a stem/lemma pair. Lemmas ending in `a` are recorded as
    /// a-final citation forms.
    pub fn insert(&mut self, stem: &str, lemma: &str) {
        if lemma.ends_with('a') {
            self.a_final.insert(lemma.to_string());
        }
        self.entries.insert(stem.to_string(), lemma.to_string());
    }

    pub fn lookup(&self, stem: &str) -> Option<&str> {
        self.entries.get(stem).map(String::as_str)
    }

    pub fn has_stem(&self, stem: &str) -> bool {
        self.entries.contains_key(stem)
    }

    pub fn is_a_final(&self, surface: &str) -> bool {
        self.a_final.contains(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, l)| (s.as_str(), l.as_str()))
    }

    /// Serialize as two-column UTF-8 TSV (surface stem, lemma).
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (stem, lemma) in &self.entries {
            writeln!(out, "{stem}\t{lemma}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lex = LemmaLexicon::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let stem = cols.next().unwrap_or("");
            let lemma = cols.next().ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected two tab-separated columns".into(),
            })?;
            if stem.is_empty() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: "empty stem".into(),
                });
            }
            lex.insert(stem, lemma);
        }
        Ok(lex)
    }
}

/// Outcome of segmenting a surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segmentation {
    /// Stem plus suffix (suffix may be `None` for unsuffixed words).
    Split { stem: String, suffix: NuclearSuffix },
    /// `-a`-final word not resolvable by the lexicon; excluded from
    /// suffix-task labels but kept in input sequences.
    Unknown,
}

impl Segmentation {
    pub fn suffix(&self) -> Option<NuclearSuffix> {
        match self {
            Segmentation::Split { suffix, .. } => Some(*suffix),
            Segmentation::Unknown => None,
        }
    }
}

// Longest-match order; `-ari` must precede `-a`, and the two-character
// forms are mutually exclusive on their final characters.
const MATCH_ORDER: [NuclearSuffix; 5] = [
    NuclearSuffix::Ari,
    NuclearSuffix::Ak,
    NuclearSuffix::Ek,
    NuclearSuffix::Ei,
    NuclearSuffix::A,
];

/// Split a surface form into stem and nuclear suffix.
///
/// Longest-match over the determined suffix forms. For a final `-a` the
/// lexicon decides: a-final lemma means the `a` is lemma-internal
/// (suffix `None`); a known stem means a real `-a` suffix; otherwise
/// the word is `Unknown`.
pub fn segment(surface: &str, lexicon: &LemmaLexicon) -> Segmentation {
    debug_assert!(!surface.is_empty(), "segment on empty surface");
    for sfx in MATCH_ORDER {
        let tail = sfx.as_str();
        if let Some(stem) = surface.strip_suffix(tail) {
            if stem.is_empty() {
                continue;
            }
            if sfx == NuclearSuffix::A {
                if lexicon.is_a_final(surface) {
                    return Segmentation::Split {
                        stem: surface.to_string(),
                        suffix: NuclearSuffix::None,
                    };
                }
                if lexicon.has_stem(stem) {
                    return Segmentation::Split {
                        stem: stem.to_string(),
                        suffix: NuclearSuffix::A,
                    };
                }
                return Segmentation::Unknown;
            }
            return Segmentation::Split {
                stem: stem.to_string(),
                suffix: sfx,
            };
        }
    }
    Segmentation::Split {
        stem: surface.to_string(),
        suffix: NuclearSuffix::None,
    }
}

/// Attach a nuclear suffix to a stem (plain concatenation).
pub fn attach(stem: &str, suffix: NuclearSuffix) -> String {
    debug_assert!(!stem.is_empty(), "attach on empty stem");
    let mut s = String::with_capacity(stem.len() + suffix.as_str().len());
    s.push_str(stem);
    s.push_str(suffix.as_str());
    s
}

/// Rewrite a surface form with its suffix replaced by a number marker:
/// plural suffixes become `<pl>`, unambiguous singular ones `<sg>`, and
/// the syncretic `-ak` becomes `<amb>`. Unsuffixed and unknown words
/// pass through unchanged.
pub fn neutralize(surface: &str, lexicon: &LemmaLexicon) -> String {
    match segment(surface, lexicon) {
        Segmentation::Split { stem, suffix } => {
            let marker = match suffix {
                NuclearSuffix::Ek | NuclearSuffix::Ei => NumberMarker::PlMark,
                NuclearSuffix::A | NuclearSuffix::Ari => NumberMarker::SgMark,
                NuclearSuffix::Ak => NumberMarker::AmbMark,
                NuclearSuffix::None => return surface.to_string(),
            };
            let mut s = stem;
            s.push_str(marker.as_str());
            s
        }
        Segmentation::Unknown => surface.to_string(),
    }
}

/// The case/number cells a suffix can realize. `-ak` maps to two cells
/// (plural absolutive and singular ergative); all others to one.
pub fn suffix_to_case_number(suffix: NuclearSuffix) -> Result<&'static [(CaseRole, NumberTag)]> {
    use CaseRole::*;
    use NumberTag::*;
    match suffix {
        NuclearSuffix::A => Ok(&[(Absolutive, Singular)]),
        NuclearSuffix::Ak => Ok(&[(Absolutive, Plural), (Ergative, Singular)]),
        NuclearSuffix::Ek => Ok(&[(Ergative, Plural)]),
        NuclearSuffix::Ari => Ok(&[(Dative, Singular)]),
        NuclearSuffix::Ei => Ok(&[(Dative, Plural)]),
        NuclearSuffix::None => Err(Error::InvalidInput(
            "suffix_to_case_number on the empty suffix".into(),
        )),
    }
}

/// The unique determined suffix for a case/number cell.
pub fn suffix_for(case: CaseRole, number: NumberTag) -> NuclearSuffix {
    match (case, number) {
        (CaseRole::Absolutive, NumberTag::Singular) => NuclearSuffix::A,
        (CaseRole::Absolutive, NumberTag::Plural) => NuclearSuffix::Ak,
        (CaseRole::Ergative, NumberTag::Singular) => NuclearSuffix::Ak,
        (CaseRole::Ergative, NumberTag::Plural) => NuclearSuffix::Ek,
        (CaseRole::Dative, NumberTag::Singular) => NuclearSuffix::Ari,
        (CaseRole::Dative, NumberTag::Plural) => NuclearSuffix::Ei,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_lexicon() -> LemmaLexicon {
        let mut lex = LemmaLexicon::new();
        lex.insert("kutxazain", "kutxazain");
        lex.insert("bezero", "bezero");
        lex.insert("liburu", "liburu");
        lex.insert("ur", "ur");
        lex.insert("uda", "uda");
        lex
    }

    #[test]
    fn segment_ergative_plural() {
        let lex = toy_lexicon();
        assert_eq!(
            segment("kutxazainek", &lex),
            Segmentation::Split {
                stem: "kutxazain".into(),
                suffix: NuclearSuffix::Ek
            }
        );
    }

    #[test]
    fn segment_a_final_lemma_is_unsuffixed() {
        let lex = toy_lexicon();
        assert_eq!(
            segment("uda", &lex),
            Segmentation::Split {
                stem: "uda".into(),
                suffix: NuclearSuffix::None
            }
        );
    }

    #[test]
    fn segment_known_stem_takes_a_suffix() {
        let lex = toy_lexicon();
        assert_eq!(
            segment("ura", &lex),
            Segmentation::Split {
                stem: "ur".into(),
                suffix: NuclearSuffix::A
            }
        );
    }

    #[test]
    fn segment_unresolvable_a_final_is_unknown() {
        let lex = toy_lexicon();
        assert_eq!(segment("hola", &lex), Segmentation::Unknown);
    }

    #[test]
    fn segment_longest_match_prefers_ari_over_a() {
        let lex = toy_lexicon();
        assert_eq!(
            segment("bezeroari", &lex),
            Segmentation::Split {
                stem: "bezero".into(),
                suffix: NuclearSuffix::Ari
            }
        );
    }

    #[test]
    fn attach_examples() {
        assert_eq!(attach("kutxazain", NuclearSuffix::Ek), "kutxazainek");
        assert_eq!(attach("liburu", NuclearSuffix::Ak), "liburuak");
        assert_eq!(attach("liburu", NuclearSuffix::None), "liburu");
    }

    #[test]
    fn neutralize_examples() {
        let lex = toy_lexicon();
        assert_eq!(neutralize("kutxazainek", &lex), "kutxazain<pl>");
        assert_eq!(neutralize("liburuak", &lex), "liburu<amb>");
        assert_eq!(neutralize("bezeroari", &lex), "bezero<sg>");
        assert_eq!(neutralize("bezeroei", &lex), "bezero<pl>");
        assert_eq!(neutralize("ura", &lex), "ur<sg>");
        // unsuffixed verb form passes through
        assert_eq!(neutralize("diizkote", &lex), "diizkote");
        // unknown -a-final word passes through
        assert_eq!(neutralize("hola", &lex), "hola");
    }

    #[test]
    fn neutralize_single_marker_only() {
        let lex = toy_lexicon();
        for w in ["kutxazainek", "liburuak", "bezeroari", "ur", "uda"] {
            let n = neutralize(w, &lex);
            let markers = n.matches('<').count();
            assert!(markers <= 1, "{n} has more than one marker");
        }
    }

    #[test]
    fn syncretism_cardinality() {
        assert_eq!(suffix_to_case_number(NuclearSuffix::Ak).unwrap().len(), 2);
        for s in [
            NuclearSuffix::A,
            NuclearSuffix::Ek,
            NuclearSuffix::Ari,
            NuclearSuffix::Ei,
        ] {
            assert_eq!(suffix_to_case_number(s).unwrap().len(), 1);
        }
        assert!(suffix_to_case_number(NuclearSuffix::None).is_err());
    }

    #[test]
    fn table_cells() {
        use CaseRole::*;
        use NumberTag::*;
        assert_eq!(
            suffix_to_case_number(NuclearSuffix::Ak).unwrap(),
            &[(Absolutive, Plural), (Ergative, Singular)]
        );
        assert_eq!(
            suffix_to_case_number(NuclearSuffix::Ek).unwrap(),
            &[(Ergative, Plural)]
        );
        assert_eq!(
            suffix_to_case_number(NuclearSuffix::Ei).unwrap(),
            &[(Dative, Plural)]
        );
        assert_eq!(suffix_for(Ergative, Plural), NuclearSuffix::Ek);
        assert_eq!(suffix_for(Absolutive, Plural), NuclearSuffix::Ak);
    }

    /// 10k random (stem, suffix) pairs with stems not ending in `a`
    /// round-trip exactly through attach then segment.
    #[test]
    fn round_trip_random_pairs() {
        let mut rng = crate::rng::substream(99, "morph-roundtrip");
        let consonants = b"bdfgklmnprstxz";
        let vowels = b"eiou"; // no 'a' so the stem never ends in 'a'
        let mut lex = LemmaLexicon::new();
        let mut pairs = Vec::new();
        for _ in 0..10_000 {
            let syllables = rng.random_range(2..=3usize);
            let mut stem = String::new();
            for _ in 0..syllables {
                stem.push(consonants[rng.random_range(0..consonants.len())] as char);
                stem.push(vowels[rng.random_range(0..vowels.len())] as char);
            }
            let sfx = NuclearSuffix::ALL[rng.random_range(0..6)];
            lex.insert(&stem, &stem);
            pairs.push((stem, sfx));
        }
        for (stem, sfx) in pairs {
            let surface = attach(&stem, sfx);
            match segment(&surface, &lex) {
                Segmentation::Split { stem: s, suffix } => {
                    assert_eq!((s.as_str(), suffix), (stem.as_str(), sfx), "on {surface:?}");
                }
                Segmentation::Unknown => panic!("unexpected Unknown for {surface:?}"),
            }
        }
    }

    #[test]
    fn lexicon_tsv_round_trip() {
        let lex = toy_lexicon();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.tsv");
        lex.write_tsv(&path).unwrap();
        let back = LemmaLexicon::read_tsv(&path).unwrap();
        assert_eq!(lex, back);
        assert!(back.is_a_final("uda"));
        assert!(!back.is_a_final("ur"));
    }
}
