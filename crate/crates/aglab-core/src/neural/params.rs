//! Parameter layout: every table and weight matrix lives in one flat
//! f64 vector, so the optimizer and the finite-difference check see the
//! whole model as a single parameter view.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Vocab;
use crate::{Error, Result};

/// Encoder configuration. Defaults are the reference sizes: 150-d
/// embeddings, 150 hidden units per direction, 128-wide head hidden
/// layers. The gradient-fidelity suite runs the same code at toy sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub embed: usize,
    pub hidden: usize,
    pub head_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            embed: 150,
            hidden: 150,
            head_hidden: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Forward and backward recurrent encoders, heads on the
    /// concatenated state.
    Bidirectional,
    /// Forward encoder only (the footnote baseline).
    Unidirectional,
    /// No encoder at all: heads applied directly to each word's
    /// embedding vector (context-free baseline).
    WordOnly,
}

impl ModelVariant {
    pub fn code(self) -> u8 {
        match self {
            ModelVariant::Bidirectional => 0,
            ModelVariant::Unidirectional => 1,
            ModelVariant::WordOnly => 2,
        }
    }

    pub fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(ModelVariant::Bidirectional),
            1 => Ok(ModelVariant::Unidirectional),
            2 => Ok(ModelVariant::WordOnly),
            _ => Err(Error::Checkpoint(format!("unknown model variant {c}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSizes {
    pub tokens: usize,
    pub lemmas: usize,
    pub ngrams: usize,
}

impl VocabSizes {
    pub fn of(vocab: &Vocab) -> Self {
        Self {
            tokens: vocab.tokens.len(),
            lemmas: vocab.lemmas.len(),
            ngrams: vocab.ngrams.len(),
        }
    }
}

/// A matrix (or vector, cols = 1) region of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatSpec {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MatSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmLayout {
    /// Input weights, 4·hidden × input (gate blocks i, f, g, o).
    pub wx: MatSpec,
    /// Recurrent weights, 4·hidden × hidden.
    pub wh: MatSpec,
    /// Gate biases, 4·hidden.
    pub b: MatSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadLayout {
    pub w1: MatSpec,
    pub b1: MatSpec,
    pub w2: MatSpec,
    pub b2: MatSpec,
}

/// Full parameter layout. Segment order (also the checkpoint order):
/// token table, lemma table, ngram table, forward cell, backward cell,
/// the three verb-role heads (erg, abs, dat), the suffix head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub variant: ModelVariant,
    pub dims: ModelDims,
    pub vocab: VocabSizes,
    pub token_table: MatSpec,
    pub lemma_table: MatSpec,
    pub ngram_table: MatSpec,
    pub fwd: Option<LstmLayout>,
    pub bwd: Option<LstmLayout>,
    pub verb_heads: [HeadLayout; 3],
    pub suffix_head: HeadLayout,
    /// End of the embedding tables; everything at or past this offset
    /// is dense per-batch (embedding gradients are sparse row updates).
    pub embed_end: usize,
    /// Encoder output dimension the heads consume.
    pub enc_dim: usize,
    pub total: usize,
}

pub const VERB_CLASSES: usize = 3; // Sg, Pl, None per role
pub const SUFFIX_CLASSES: usize = 6;

impl Layout {
    pub fn new(variant: ModelVariant, dims: ModelDims, vocab: VocabSizes) -> Self {
        let e = dims.embed;
        let h = dims.hidden;
        let hh = dims.head_hidden;
        let enc_dim = match variant {
            ModelVariant::Bidirectional => 2 * h,
            ModelVariant::Unidirectional => h,
            ModelVariant::WordOnly => e,
        };

        let mut off = 0usize;
        let mut mat = |rows: usize, cols: usize| {
            let m = MatSpec {
                offset: off,
                rows,
                cols,
            };
            off += rows * cols;
            m
        };

        let token_table = mat(vocab.tokens, e);
        let lemma_table = mat(vocab.lemmas, e);
        let ngram_table = mat(vocab.ngrams, e);
        let embed_end = ngram_table.offset + ngram_table.len();

        let lstm = |mat: &mut dyn FnMut(usize, usize) -> MatSpec| LstmLayout {
            wx: mat(4 * h, e),
            wh: mat(4 * h, h),
            b: mat(4 * h, 1),
        };
        let fwd = match variant {
            ModelVariant::WordOnly => None,
            _ => Some(lstm(&mut mat)),
        };
        let bwd = match variant {
            ModelVariant::Bidirectional => Some(lstm(&mut mat)),
            _ => None,
        };

        let mut head = |out: usize| HeadLayout {
            w1: mat(hh, enc_dim),
            b1: mat(hh, 1),
            w2: mat(out, hh),
            b2: mat(out, 1),
        };
        let verb_heads = [
            head(VERB_CLASSES),
            head(VERB_CLASSES),
            head(VERB_CLASSES),
        ];
        let suffix_head = head(SUFFIX_CLASSES);

        Self {
            variant,
            dims,
            vocab,
            token_table,
            lemma_table,
            ngram_table,
            fwd,
            bwd,
            verb_heads,
            suffix_head,
            embed_end,
            enc_dim,
            total: off,
        }
    }
}

/// All model parameters as one flat vector plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layout: Layout,
    pub values: Vec<f64>,
}

impl ModelParams {
    /// Zero-initialized parameters.
    pub fn zeros(layout: Layout) -> Self {
        let values = vec![0.0; layout.total];
        Self { layout, values }
    }

    /// Seeded initialization: embeddings are Gaussian with standard
    /// deviation 0.1; recurrent and head weights are uniform in
    /// ±1/sqrt(hidden); biases are zero except the forget-gate biases,
    /// which start at 1.
    pub fn init(layout: Layout, seed: u64) -> Self {
        let mut rng = crate::rng::substream(seed, "init");
        let mut p = Self::zeros(layout);
        let embed_end = p.layout.embed_end;
        for v in &mut p.values[..embed_end] {
            *v = gaussian(&mut rng) * 0.1;
        }
        let bound = 1.0 / (p.layout.dims.hidden.max(1) as f64).sqrt();
        let uniform_fill = |spec: &MatSpec, values: &mut [f64], rng: &mut rand_chacha::ChaCha8Rng| {
            for v in &mut values[spec.range()] {
                *v = rng.random_range(-bound..bound);
            }
        };
        let lstm_specs: Vec<LstmLayout> = p
            .layout
            .fwd
            .iter()
            .chain(p.layout.bwd.iter())
            .cloned()
            .collect();
        for l in &lstm_specs {
            uniform_fill(&l.wx, &mut p.values, &mut rng);
            uniform_fill(&l.wh, &mut p.values, &mut rng);
            // biases zero, forget gate block at 1
            let h = p.layout.dims.hidden;
            let b = &mut p.values[l.b.range()];
            for v in b.iter_mut() {
                *v = 0.0;
            }
            for v in b[h..2 * h].iter_mut() {
                *v = 1.0;
            }
        }
        let heads: Vec<HeadLayout> = p
            .layout
            .verb_heads
            .iter()
            .chain(std::iter::once(&p.layout.suffix_head))
            .cloned()
            .collect();
        for hd in &heads {
            uniform_fill(&hd.w1, &mut p.values, &mut rng);
            uniform_fill(&hd.w2, &mut p.values, &mut rng);
        }
        p
    }

    pub fn mat(&self, spec: &MatSpec) -> &[f64] {
        &self.values[spec.range()]
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                what: "parameters".into(),
                context: "model".into(),
            })
        }
    }
}

/// Box-Muller standard normal draw.
fn gaussian(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.random_range(0.0..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_sizes() -> VocabSizes {
        VocabSizes {
            tokens: 10,
            lemmas: 8,
            ngrams: 20,
        }
    }

    #[test]
    fn layout_partitions_the_parameter_vector() {
        let dims = ModelDims {
            embed: 6,
            hidden: 4,
            head_hidden: 5,
        };
        let l = Layout::new(ModelVariant::Bidirectional, dims, toy_sizes());
        let mut covered = vec![false; l.total];
        let mut mark = |spec: &MatSpec| {
            for i in spec.range() {
                assert!(!covered[i], "overlap at {i}");
                covered[i] = true;
            }
        };
        mark(&l.token_table);
        mark(&l.lemma_table);
        mark(&l.ngram_table);
        for lstm in l.fwd.iter().chain(l.bwd.iter()) {
            mark(&lstm.wx);
            mark(&lstm.wh);
            mark(&lstm.b);
        }
        for hd in l.verb_heads.iter().chain(std::iter::once(&l.suffix_head)) {
            mark(&hd.w1);
            mark(&hd.b1);
            mark(&hd.w2);
            mark(&hd.b2);
        }
        assert!(covered.into_iter().all(|c| c), "gap in layout");
        assert_eq!(l.enc_dim, 8);
    }

    #[test]
    fn word_only_layout_has_no_recurrent_weights() {
        let dims = ModelDims {
            embed: 6,
            hidden: 4,
            head_hidden: 5,
        };
        let l = Layout::new(ModelVariant::WordOnly, dims, toy_sizes());
        assert!(l.fwd.is_none() && l.bwd.is_none());
        assert_eq!(l.enc_dim, 6);
    }

    #[test]
    fn init_is_deterministic_and_sets_forget_bias() {
        let dims = ModelDims {
            embed: 6,
            hidden: 4,
            head_hidden: 5,
        };
        let l = Layout::new(ModelVariant::Bidirectional, dims, toy_sizes());
        let a = ModelParams::init(l.clone(), 42);
        let b = ModelParams::init(l.clone(), 42);
        assert_eq!(a.values, b.values);
        let fwd = a.layout.fwd.unwrap();
        let bias = a.mat(&fwd.b);
        assert!(bias[4..8].iter().all(|v| *v == 1.0));
        assert!(bias[0..4].iter().all(|v| *v == 0.0));
    }
}
