//! Frequency-capped vocabularies over tokens, lemmas, and character
//! ngrams, with reserved symbols pinned to the lowest ids.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::types::{Token, RESERVED_SYMBOLS};
use crate::{Error, Result};

/// Table cap: the most frequent entries kept per table.
pub const VOCAB_CAP: usize = 100_000;

/// Character ngrams of lengths 1..=5 over the boundary-marked surface
/// `^word$`, as a multiset (repeats kept).
pub fn extract_ngrams(surface: &str) -> Vec<String> {
    debug_assert!(!surface.is_empty());
    let mut chars: Vec<char> = Vec::with_capacity(surface.chars().count() + 2);
    chars.push('^');
    chars.extend(surface.chars());
    chars.push('$');
    let mut out = Vec::new();
    for n in 1..=5usize {
        if n > chars.len() {
            break;
        }
        for w in chars.windows(n) {
            out.push(w.iter().collect());
        }
    }
    out
}

/// One id table: reserved symbols first, then entries ranked by
/// descending frequency with lexicographic tie-break, truncated to the
/// cap. Everything else maps to `<unk>` (id 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabTable {
    items: Vec<String>,
    index: HashMap<String, u32>,
}

impl VocabTable {
    fn from_counts(counts: HashMap<String, u64>, cap: usize) -> Self {
        let mut ranked: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(s, _)| !RESERVED_SYMBOLS.contains(&s.as_str()))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(cap);
        let mut items: Vec<String> = RESERVED_SYMBOLS.iter().map(|s| s.to_string()).collect();
        items.extend(ranked.into_iter().map(|(s, _)| s));
        let index = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Self { items, index }
    }

    fn from_items(items: Vec<String>) -> Result<Self> {
        for (i, r) in RESERVED_SYMBOLS.iter().enumerate() {
            if items.get(i).map(String::as_str) != Some(*r) {
                return Err(Error::VocabMismatch(format!(
                    "reserved entry {i} must be {r}"
                )));
            }
        }
        let index: HashMap<String, u32> = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        if index.len() != items.len() {
            return Err(Error::VocabMismatch("duplicate vocabulary entry".into()));
        }
        Ok(Self { items, index })
    }

    pub fn id(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    /// Id with `<unk>` fallback.
    pub fn id_or_unk(&self, s: &str) -> u32 {
        self.id(s).unwrap_or(0)
    }

    pub fn unk_id(&self) -> u32 {
        0
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

/// The three id tables used by the composite embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub tokens: VocabTable,
    pub lemmas: VocabTable,
    pub ngrams: VocabTable,
}

impl Vocab {
    /// SHA-256 over the canonical table contents; checkpoints refuse to
    /// load under a different vocabulary.
    pub fn hash(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for (kind, table) in [
            ("token", &self.tokens),
            ("lemma", &self.lemmas),
            ("ngram", &self.ngrams),
        ] {
            hasher.update(kind.as_bytes());
            hasher.update([0u8]);
            for item in table.items() {
                hasher.update(item.as_bytes());
                hasher.update([b'\n']);
            }
        }
        hasher.finalize().into()
    }

    pub fn hash_hex(&self) -> String {
        self.hash().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Ngram ids for a surface, `<unk>`-substituted, repeats kept.
    pub fn ngram_ids(&self, surface: &str) -> Vec<u32> {
        extract_ngrams(surface)
            .iter()
            .map(|ng| self.ngrams.id_or_unk(ng))
            .collect()
    }

    /// Vocabulary file: TSV of (kind, string, id).
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (kind, table) in [
            ("token", &self.tokens),
            ("lemma", &self.lemmas),
            ("ngram", &self.ngrams),
        ] {
            for (i, item) in table.items().iter().enumerate() {
                writeln!(out, "{kind}\t{item}\t{i}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut tables: HashMap<&str, Vec<(usize, String)>> = HashMap::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let mut cols = line.splitn(3, '\t');
            let kind = cols.next().ok_or_else(|| parse_err("missing kind"))?;
            let rest = cols.next().ok_or_else(|| parse_err("missing string"))?;
            let id_str = cols.next().ok_or_else(|| parse_err("missing id"))?;
            let id: usize = id_str
                .parse()
                .map_err(|_| parse_err("id is not an integer"))?;
            let key = match kind {
                "token" => "token",
                "lemma" => "lemma",
                "ngram" => "ngram",
                _ => return Err(parse_err("unknown table kind")),
            };
            tables.entry(key).or_default().push((id, rest.to_string()));
        }
        let mut build = |key: &str| -> Result<VocabTable> {
            let mut entries = tables.remove(key).unwrap_or_default();
            entries.sort_by_key(|(i, _)| *i);
            for (expect, (i, _)) in entries.iter().enumerate() {
                if *i != expect {
                    return Err(Error::VocabMismatch(format!(
                        "non-contiguous ids in {key} table"
                    )));
                }
            }
            VocabTable::from_items(entries.into_iter().map(|(_, s)| s).collect())
        };
        Ok(Vocab {
            tokens: build("token")?,
            lemmas: build("lemma")?,
            ngrams: build("ngram")?,
        })
    }
}

fn count_token(
    t: &Token,
    tokens: &mut HashMap<String, u64>,
    lemmas: &mut HashMap<String, u64>,
    ngrams: &mut HashMap<String, u64>,
) {
    if t.is_reserved() {
        // reserved symbols embed via the token table only
        *tokens.entry(t.surface.clone()).or_insert(0) += 1;
        return;
    }
    *tokens.entry(t.surface.clone()).or_insert(0) += 1;
    *lemmas.entry(t.lemma.clone()).or_insert(0) += 1;
    for ng in extract_ngrams(&t.surface) {
        *ngrams.entry(ng).or_insert(0) += 1;
    }
}

/// Build the three tables from token sequences (training data only).
pub fn build_vocab_from_seqs<'a, I>(seqs: I, cap: usize) -> Vocab
where
    I: IntoIterator<Item = &'a [Token]>,
{
    let mut tokens = HashMap::new();
    let mut lemmas = HashMap::new();
    let mut ngrams = HashMap::new();
    for seq in seqs {
        for t in seq {
            count_token(t, &mut tokens, &mut lemmas, &mut ngrams);
        }
    }
    Vocab {
        tokens: VocabTable::from_counts(tokens, cap),
        lemmas: VocabTable::from_counts(lemmas, cap),
        ngrams: VocabTable::from_counts(ngrams, cap),
    }
}

/// Build a vocabulary over training sentences at the standard cap.
pub fn build_vocab(train_sentences: &[super::Sentence]) -> Vocab {
    build_vocab_with_cap(train_sentences, VOCAB_CAP)
}

pub fn build_vocab_with_cap(train_sentences: &[super::Sentence], cap: usize) -> Vocab {
    build_vocab_from_seqs(train_sentences.iter().map(|s| s.tokens.as_slice()), cap)
}
