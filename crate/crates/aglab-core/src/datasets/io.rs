//! File formats: corpus JSONL (one sentence per line), generic
//! instance JSONL, and the annotated CoNLL-like TSV.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::types::{Sentence, Token};
use crate::grammar::{CaseRole, NumberTag};
use crate::morphology::{suffix_for, NuclearSuffix};
use crate::{Error, Result};

/// Write one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    let mut items = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

pub fn write_corpus_jsonl(path: &Path, sentences: &[Sentence]) -> Result<()> {
    write_jsonl(path, sentences)
}

pub fn read_corpus_jsonl(path: &Path) -> Result<Vec<Sentence>> {
    let sentences: Vec<Sentence> = read_jsonl(path)?;
    for s in &sentences {
        s.validate()?;
    }
    Ok(sentences)
}

const EMPTY_FIELD: &str = "_";

fn parse_case(raw: &str) -> (Option<CaseRole>, Option<String>) {
    if raw == EMPTY_FIELD || raw.is_empty() {
        return (None, None);
    }
    let role = match raw.to_ascii_lowercase().as_str() {
        "erg" => Some(CaseRole::Ergative),
        "abs" => Some(CaseRole::Absolutive),
        "dat" => Some(CaseRole::Dative),
        _ => None,
    };
    (role, Some(raw.to_string()))
}

/// Read an annotated corpus in the CoNLL-like TSV layout: one token per
/// line with tab-separated columns (index, surface, lemma, POS, case,
/// number, head index, dependency label), `_` for empty fields, and a
/// blank line between sentences. Nuclear case plus number yields the
/// token's nuclear suffix tag; head indices are validated (0 is root).
pub fn read_annotated(path: &Path) -> Result<Vec<Sentence>> {
    let file = std::fs::File::open(path)?;
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, Token, usize)> = Vec::new(); // (index, token, head)
    let mut block_start_line = 1usize;

    let finish = |block: &mut Vec<(usize, Token, usize)>,
                  sentences: &mut Vec<Sentence>,
                  start_line: usize|
     -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let n = block.len();
        for (idx, _, head) in block.iter() {
            if *head > n {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: start_line + idx - 1,
                    msg: format!("head index {head} out of range for a {n}-token sentence"),
                });
            }
        }
        let tokens = block
            .drain(..)
            .map(|(_, mut t, head)| {
                t.head = Some(head);
                t
            })
            .collect();
        sentences.push(Sentence {
            id: format!("t{:05}", sentences.len()),
            tokens,
            gold_clauses: None,
        });
        Ok(())
    };

    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            finish(&mut block, &mut sentences, block_start_line)?;
            block_start_line = lineno + 1;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parse_err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg,
        };
        if cols.len() != 8 {
            return Err(parse_err(format!(
                "expected 8 tab-separated columns, got {}",
                cols.len()
            )));
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(format!("bad token index {:?}", cols[0])))?;
        if index != block.len() + 1 {
            return Err(parse_err(format!(
                "token index {index} out of order (expected {})",
                block.len() + 1
            )));
        }
        let surface = cols[1].to_string();
        if surface.is_empty() {
            return Err(parse_err("empty surface form".into()));
        }
        let lemma = if cols[2] == EMPTY_FIELD || cols[2].is_empty() {
            surface.clone()
        } else {
            cols[2].to_string()
        };
        let pos = (cols[3] != EMPTY_FIELD && !cols[3].is_empty()).then(|| cols[3].to_string());
        let (gold_case, case_raw) = parse_case(cols[4]);
        let gold_number = match cols[5].to_ascii_lowercase().as_str() {
            "sg" => Some(NumberTag::Singular),
            "pl" => Some(NumberTag::Plural),
            s if s == EMPTY_FIELD || s.is_empty() => None,
            other => {
                return Err(parse_err(format!("bad number tag {other:?}")));
            }
        };
        let head: usize = cols[6]
            .parse()
            .map_err(|_| parse_err(format!("bad head index {:?}", cols[6])))?;
        let dep_label =
            (cols[7] != EMPTY_FIELD && !cols[7].is_empty()).then(|| cols[7].to_string());

        let is_verb = matches!(
            pos.as_deref().map(str::to_ascii_lowercase).as_deref(),
            Some("verb") | Some("aux") | Some("v")
        );
        let is_auxiliary = matches!(
            pos.as_deref().map(str::to_ascii_lowercase).as_deref(),
            Some("aux")
        );
        let nuclear = match (gold_case, gold_number) {
            (Some(c), Some(n)) => suffix_for(c, n),
            _ => NuclearSuffix::None,
        };

        block.push((
            index,
            Token {
                surface,
                lemma,
                is_verb,
                is_auxiliary,
                nuclear,
                gold_case,
                gold_number,
                pos,
                dep_label,
                case_raw,
                head: None,
            },
            head,
        ));
    }
    finish(&mut block, &mut sentences, block_start_line)?;
    Ok(sentences)
}

/// Inverse of [`read_annotated`] (modulo sentence ids, which the reader
/// regenerates positionally).
pub fn write_annotated(path: &Path, sentences: &[Sentence]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for s in sentences {
        for (i, t) in s.tokens.iter().enumerate() {
            let case = t
                .case_raw
                .clone()
                .or_else(|| t.gold_case.map(|c| c.as_str().to_string()))
                .unwrap_or_else(|| EMPTY_FIELD.to_string());
            let number = t
                .gold_number
                .map(|n| n.as_str().to_string())
                .unwrap_or_else(|| EMPTY_FIELD.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                t.surface,
                t.lemma,
                t.pos.as_deref().unwrap_or(EMPTY_FIELD),
                case,
                number,
                t.head.unwrap_or(0),
                t.dep_label.as_deref().unwrap_or(EMPTY_FIELD),
            )?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
