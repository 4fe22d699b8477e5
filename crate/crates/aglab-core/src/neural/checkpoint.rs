//! Versioned binary checkpoints: a fixed header (dims, vocabulary
//! sizes and hash, step count) followed by the flat parameter vector as
//! little-endian 64-bit floats in layout order. Loading refuses a
//! checkpoint whose vocabulary hash does not match.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::{Layout, ModelDims, ModelParams, ModelVariant, VocabSizes};
use crate::datasets::Vocab;
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"AGLB";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub step: u64,
    pub vocab_hash: [u8; 32],
}

impl Checkpoint {
    pub fn new(params: ModelParams, step: u64, vocab: &Vocab) -> Self {
        Self {
            params,
            step,
            vocab_hash: vocab.hash(),
        }
    }

    pub fn matches_vocab(&self, vocab: &Vocab) -> bool {
        self.vocab_hash == vocab.hash()
    }

    /// Refuse use under a different vocabulary.
    pub fn require_vocab(&self, vocab: &Vocab) -> Result<()> {
        if self.matches_vocab(vocab) {
            Ok(())
        } else {
            Err(Error::VocabMismatch(
                "checkpoint was trained under a different vocabulary".into(),
            ))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        let l = &self.params.layout;
        out.write_all(&MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&[l.variant.code()])?;
        for d in [l.dims.embed, l.dims.hidden, l.dims.head_hidden] {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in [l.vocab.tokens, l.vocab.lemmas, l.vocab.ngrams] {
            out.write_all(&(v as u32).to_le_bytes())?;
        }
        out.write_all(&self.vocab_hash)?;
        out.write_all(&self.step.to_le_bytes())?;
        out.write_all(&(self.params.values.len() as u64).to_le_bytes())?;
        for v in &self.params.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut inp = BufReader::new(std::fs::File::open(path)?);
        let bad = |msg: &str| Error::Checkpoint(format!("{}: {msg}", path.display()));

        let mut magic = [0u8; 4];
        inp.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u32buf = [0u8; 4];
        inp.read_exact(&mut u32buf)?;
        if u32::from_le_bytes(u32buf) != VERSION {
            return Err(bad("unsupported version"));
        }
        let mut byte = [0u8; 1];
        inp.read_exact(&mut byte)?;
        let variant = ModelVariant::from_code(byte[0])?;
        let read_u32 = |inp: &mut BufReader<std::fs::File>| -> Result<usize> {
            let mut b = [0u8; 4];
            inp.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b) as usize)
        };
        let dims = ModelDims {
            embed: read_u32(&mut inp)?,
            hidden: read_u32(&mut inp)?,
            head_hidden: read_u32(&mut inp)?,
        };
        let vocab = VocabSizes {
            tokens: read_u32(&mut inp)?,
            lemmas: read_u32(&mut inp)?,
            ngrams: read_u32(&mut inp)?,
        };
        let mut vocab_hash = [0u8; 32];
        inp.read_exact(&mut vocab_hash)?;
        let mut u64buf = [0u8; 8];
        inp.read_exact(&mut u64buf)?;
        let step = u64::from_le_bytes(u64buf);
        inp.read_exact(&mut u64buf)?;
        let n_params = u64::from_le_bytes(u64buf) as usize;

        let layout = Layout::new(variant, dims, vocab);
        if layout.total != n_params {
            return Err(bad(&format!(
                "parameter count {n_params} does not match layout size {}",
                layout.total
            )));
        }
        let mut values = vec![0.0f64; n_params];
        let mut fbuf = [0u8; 8];
        for v in values.iter_mut() {
            inp.read_exact(&mut fbuf)?;
            *v = f64::from_le_bytes(fbuf);
        }
        Ok(Checkpoint {
            params: ModelParams { layout, values },
            step,
            vocab_hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{build_vocab, Sentence, Token};

    fn toy() -> (Vocab, ModelParams) {
        let s = Sentence {
            id: "v".into(),
            tokens: vec![Token::word("bo", "bo"), Token::word("da", "da")],
            gold_clauses: None,
        };
        let vocab = build_vocab(std::slice::from_ref(&s));
        let dims = ModelDims {
            embed: 4,
            hidden: 3,
            head_hidden: 2,
        };
        let params = ModelParams::init(
            Layout::new(ModelVariant::Bidirectional, dims, VocabSizes::of(&vocab)),
            21,
        );
        (vocab, params)
    }

    #[test]
    fn save_load_round_trip() {
        let (vocab, params) = toy();
        let ckpt = Checkpoint::new(params, 123, &vocab);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(ckpt, back);
        back.require_vocab(&vocab).unwrap();
    }

    #[test]
    fn vocab_mismatch_is_refused() {
        let (vocab, params) = toy();
        let ckpt = Checkpoint::new(params, 1, &vocab);
        let other = Sentence {
            id: "w".into(),
            tokens: vec![Token::word("xx", "xx")],
            gold_clauses: None,
        };
        let other_vocab = build_vocab(std::slice::from_ref(&other));
        assert!(ckpt.require_vocab(&other_vocab).is_err());
    }

    #[test]
    fn truncated_file_is_an_error() {
        let (vocab, params) = toy();
        let ckpt = Checkpoint::new(params, 1, &vocab);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        ckpt.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }
}
