//! Composite embeddings, task heads, and the batched reverse-mode
//! gradient computation.
//!
//! A word embeds as the sum of its token, lemma, and character-ngram
//! vectors, with `<unk>` rows substituted for out-of-vocabulary parts;
//! reserved `<...>` symbols use the token table only. Heads are
//! one-hidden-layer (tanh) perceptrons over encoder states: three
//! independent 3-way heads for the verb task (ergative, absolutive,
//! dative) and one 6-way head for the suffix task.
//!
//! Gradients for a batch are computed per instance and reduced in a
//! fixed chunk order, so results are bit-identical whether or not the
//! instances were processed in parallel.

use std::collections::BTreeMap;

use super::encoder::{concat_hidden, lstm_backward, lstm_forward, Hidden, LstmCache};
use super::math::{add_acc, matvec_acc, matvec_t_acc, outer_acc, softmax_in_place};
use super::params::{HeadLayout, ModelParams, ModelVariant, SUFFIX_CLASSES, VERB_CLASSES};
use crate::datasets::{SuffixTaskInstance, Token, VerbTaskInstance, Vocab};
use crate::grammar::NumberTag;
use crate::morphology::NuclearSuffix;
use crate::{Error, Result};

/// Fixed number of reduction chunks per batch. Partial gradients are
/// summed chunk by chunk in index order, which pins the floating-point
/// reduction order independently of worker count.
pub const GRAD_CHUNKS: usize = 4;

/// Per-role class order: Sg, Pl, None (also the prediction tie-break).
pub fn verb_class(n: Option<NumberTag>) -> usize {
    match n {
        Some(NumberTag::Singular) => 0,
        Some(NumberTag::Plural) => 1,
        None => 2,
    }
}

pub fn verb_class_value(idx: usize) -> Option<NumberTag> {
    match idx {
        0 => Some(NumberTag::Singular),
        1 => Some(NumberTag::Plural),
        _ => None,
    }
}

/// Suffix class order: A, Ak, Ek, Ari, Ei, None (prediction tie-break).
pub fn suffix_class(s: NuclearSuffix) -> usize {
    NuclearSuffix::ALL
        .iter()
        .position(|x| *x == s)
        .expect("closed enumeration")
}

pub fn suffix_class_value(idx: usize) -> NuclearSuffix {
    NuclearSuffix::ALL[idx]
}

/// Vocabulary ids backing one token's embedding.
#[derive(Debug, Clone)]
pub struct EmbedIds {
    pub token: u32,
    pub lemma: Option<u32>,
    pub ngrams: Vec<u32>,
}

pub fn embed_ids(token: &Token, vocab: &Vocab) -> EmbedIds {
    if token.is_reserved() {
        EmbedIds {
            token: vocab.tokens.id_or_unk(&token.surface),
            lemma: None,
            ngrams: Vec::new(),
        }
    } else {
        EmbedIds {
            token: vocab.tokens.id_or_unk(&token.surface),
            lemma: Some(vocab.lemmas.id_or_unk(&token.lemma)),
            ngrams: vocab.ngram_ids(&token.surface),
        }
    }
}

fn embed_into(params: &ModelParams, ids: &EmbedIds, out: &mut [f64]) {
    let e = params.layout.dims.embed;
    let row = |table_off: usize, id: u32| {
        let start = table_off + id as usize * e;
        &params.values[start..start + e]
    };
    out.copy_from_slice(row(params.layout.token_table.offset, ids.token));
    if let Some(l) = ids.lemma {
        add_acc(out, row(params.layout.lemma_table.offset, l));
    }
    for &ng in &ids.ngrams {
        add_acc(out, row(params.layout.ngram_table.offset, ng));
    }
}

/// Composite embedding vector for one token.
pub fn embed(params: &ModelParams, vocab: &Vocab, token: &Token) -> Result<Vec<f64>> {
    if params.layout.vocab.tokens != vocab.tokens.len()
        || params.layout.vocab.lemmas != vocab.lemmas.len()
        || params.layout.vocab.ngrams != vocab.ngrams.len()
    {
        return Err(Error::Config(
            "vocabulary sizes do not match the parameter layout".into(),
        ));
    }
    let ids = embed_ids(token, vocab);
    let mut out = vec![0.0; params.layout.dims.embed];
    embed_into(params, &ids, &mut out);
    Ok(out)
}

/// Full forward state of one sequence, kept for backprop.
pub struct SeqForward {
    pub ids: Vec<EmbedIds>,
    pub xs: Vec<f64>,
    pub fwd: Option<LstmCache>,
    pub bwd: Option<LstmCache>,
    pub hidden: Hidden,
}

pub fn forward_sequence(
    params: &ModelParams,
    vocab: &Vocab,
    tokens: &[Token],
) -> Result<SeqForward> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput("empty token sequence".into()));
    }
    let e = params.layout.dims.embed;
    let n = tokens.len();
    let ids: Vec<EmbedIds> = tokens.iter().map(|t| embed_ids(t, vocab)).collect();
    let mut xs = vec![0.0; n * e];
    for (i, id) in ids.iter().enumerate() {
        embed_into(params, id, &mut xs[i * e..(i + 1) * e]);
    }
    let fwd = params
        .layout
        .fwd
        .as_ref()
        .map(|l| lstm_forward(params, l, &xs, n, false));
    let bwd = params
        .layout
        .bwd
        .as_ref()
        .map(|l| lstm_forward(params, l, &xs, n, true));
    let hidden = concat_hidden(&params.layout, &xs, n, fwd.as_ref(), bwd.as_ref());
    Ok(SeqForward {
        ids,
        xs,
        fwd,
        bwd,
        hidden,
    })
}

/// Encoder states for a token sequence (inference path).
pub fn encode_tokens(params: &ModelParams, vocab: &Vocab, tokens: &[Token]) -> Result<Hidden> {
    Ok(forward_sequence(params, vocab, tokens)?.hidden)
}

struct HeadCache {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn head_forward(params: &ModelParams, head: &HeadLayout, x: &[f64]) -> HeadCache {
    let hh = head.w1.rows;
    let d = head.w1.cols;
    let out = head.w2.rows;
    let mut hidden = params.mat(&head.b1).to_vec();
    matvec_acc(params.mat(&head.w1), hh, d, x, &mut hidden);
    for v in hidden.iter_mut() {
        *v = v.tanh();
    }
    let mut logits = params.mat(&head.b2).to_vec();
    matvec_acc(params.mat(&head.w2), out, hh, &hidden, &mut logits);
    HeadCache { hidden, logits }
}

#[allow(clippy::too_many_arguments)]
fn head_backward(
    params: &ModelParams,
    head: &HeadLayout,
    x: &[f64],
    cache: &HeadCache,
    dlogits: &[f64],
    grad_tail: &mut [f64],
    tail_base: usize,
    dx: &mut [f64],
) {
    let hh = head.w1.rows;
    let d = head.w1.cols;
    let out = head.w2.rows;
    let r = |m: &super::params::MatSpec| m.offset - tail_base..m.offset - tail_base + m.len();

    add_acc(&mut grad_tail[r(&head.b2)], dlogits);
    outer_acc(&mut grad_tail[r(&head.w2)], out, hh, dlogits, &cache.hidden);
    let mut dhidden = vec![0.0; hh];
    matvec_t_acc(params.mat(&head.w2), out, hh, dlogits, &mut dhidden);
    for (dh, h) in dhidden.iter_mut().zip(&cache.hidden) {
        *dh *= 1.0 - h * h;
    }
    add_acc(&mut grad_tail[r(&head.b1)], &dhidden);
    outer_acc(&mut grad_tail[r(&head.w1)], hh, d, &dhidden, x);
    matvec_t_acc(params.mat(&head.w1), hh, d, &dhidden, dx);
}

/// Three independent distributions over {Sg, Pl, None}, one per role
/// (ergative, absolutive, dative), for the encoder state over the
/// masked verb.
pub fn verb_probs(params: &ModelParams, state: &[f64]) -> Result<[[f64; VERB_CLASSES]; 3]> {
    if state.len() != params.layout.enc_dim {
        return Err(Error::Config(format!(
            "state dimension {} does not match encoder output {}",
            state.len(),
            params.layout.enc_dim
        )));
    }
    let mut out = [[0.0; VERB_CLASSES]; 3];
    for (role, head) in params.layout.verb_heads.iter().enumerate() {
        let mut logits = head_forward(params, head, state).logits;
        softmax_in_place(&mut logits);
        out[role].copy_from_slice(&logits);
    }
    Ok(out)
}

/// Per-position distributions over the six suffix classes.
pub fn suffix_probs(params: &ModelParams, hidden: &Hidden) -> Vec<[f64; SUFFIX_CLASSES]> {
    let head = &params.layout.suffix_head;
    (0..hidden.n)
        .map(|i| {
            let mut logits = head_forward(params, head, hidden.row(i)).logits;
            softmax_in_place(&mut logits);
            let mut row = [0.0; SUFFIX_CLASSES];
            row.copy_from_slice(&logits);
            row
        })
        .collect()
}

/// A training batch for either task.
pub enum TaskBatch<'a> {
    Verb(&'a [VerbTaskInstance]),
    Suffix(&'a [SuffixTaskInstance]),
}

impl TaskBatch<'_> {
    fn len(&self) -> usize {
        match self {
            TaskBatch::Verb(v) => v.len(),
            TaskBatch::Suffix(s) => s.len(),
        }
    }
}

/// Partial gradient of one chunk: dense from the end of the embedding
/// tables onward, sparse rows for the tables themselves.
struct ChunkGrad {
    tail: Vec<f64>,
    rows: BTreeMap<usize, Vec<f64>>,
    loss: f64,
}

fn scatter_embedding_grads(
    params: &ModelParams,
    ids: &[EmbedIds],
    dx: &[f64],
    rows: &mut BTreeMap<usize, Vec<f64>>,
) {
    let e = params.layout.dims.embed;
    let mut bump = |row_start: usize, g: &[f64]| {
        let entry = rows.entry(row_start).or_insert_with(|| vec![0.0; e]);
        add_acc(entry, g);
    };
    for (i, id) in ids.iter().enumerate() {
        let g = &dx[i * e..(i + 1) * e];
        bump(
            params.layout.token_table.offset + id.token as usize * e,
            g,
        );
        if let Some(l) = id.lemma {
            bump(params.layout.lemma_table.offset + l as usize * e, g);
        }
        for &ng in &id.ngrams {
            bump(params.layout.ngram_table.offset + ng as usize * e, g);
        }
    }
}

fn backward_through_encoder(
    params: &ModelParams,
    seq: &SeqForward,
    dh: &[f64],
    chunk: &mut ChunkGrad,
) {
    let n = seq.hidden.n;
    let e = params.layout.dims.embed;
    let h = params.layout.dims.hidden;
    let tail_base = params.layout.embed_end;
    let mut dx = vec![0.0; n * e];
    match params.layout.variant {
        ModelVariant::Bidirectional => {
            let dim = 2 * h;
            let mut dh_f = vec![0.0; n * h];
            let mut dh_b = vec![0.0; n * h];
            for i in 0..n {
                dh_f[i * h..(i + 1) * h].copy_from_slice(&dh[i * dim..i * dim + h]);
                dh_b[i * h..(i + 1) * h].copy_from_slice(&dh[i * dim + h..(i + 1) * dim]);
            }
            let fl = params.layout.fwd.as_ref().unwrap();
            let bl = params.layout.bwd.as_ref().unwrap();
            lstm_backward(
                params,
                fl,
                &seq.xs,
                n,
                seq.fwd.as_ref().unwrap(),
                &dh_f,
                false,
                &mut chunk.tail,
                tail_base,
                &mut dx,
            );
            lstm_backward(
                params,
                bl,
                &seq.xs,
                n,
                seq.bwd.as_ref().unwrap(),
                &dh_b,
                true,
                &mut chunk.tail,
                tail_base,
                &mut dx,
            );
        }
        ModelVariant::Unidirectional => {
            let fl = params.layout.fwd.as_ref().unwrap();
            lstm_backward(
                params,
                fl,
                &seq.xs,
                n,
                seq.fwd.as_ref().unwrap(),
                dh,
                false,
                &mut chunk.tail,
                tail_base,
                &mut dx,
            );
        }
        ModelVariant::WordOnly => {
            add_acc(&mut dx, dh);
        }
    }
    scatter_embedding_grads(params, &seq.ids, &dx, &mut chunk.rows);
}

/// Cross-entropy at one head; returns the loss contribution and fills
/// `dlogits` with the scaled softmax gradient.
fn head_ce(
    params: &ModelParams,
    head: &HeadLayout,
    x: &[f64],
    target: usize,
    denom: f64,
) -> (HeadCache, f64, Vec<f64>) {
    let cache = head_forward(params, head, x);
    let mut p = cache.logits.clone();
    softmax_in_place(&mut p);
    let loss = -p[target].ln() / denom;
    let mut dlogits = p;
    dlogits[target] -= 1.0;
    for v in dlogits.iter_mut() {
        *v /= denom;
    }
    (cache, loss, dlogits)
}

fn verb_instance_backward(
    params: &ModelParams,
    vocab: &Vocab,
    inst: &VerbTaskInstance,
    denom: f64,
    chunk: &mut ChunkGrad,
) -> Result<()> {
    let seq = forward_sequence(params, vocab, &inst.input_tokens)?;
    let dim = params.layout.enc_dim;
    let n = seq.hidden.n;
    if inst.mask_index >= n {
        return Err(Error::InvalidInput(format!(
            "mask index {} out of range in {}",
            inst.mask_index, inst.source_id
        )));
    }
    let state = seq.hidden.row(inst.mask_index).to_vec();
    let mut dh = vec![0.0; n * dim];
    let tail_base = params.layout.embed_end;
    let targets = [
        verb_class(inst.label.erg),
        verb_class(inst.label.abs),
        verb_class(inst.label.dat),
    ];
    let mut dstate = vec![0.0; dim];
    for (role, head) in params.layout.verb_heads.iter().enumerate() {
        let (cache, loss, dlogits) = head_ce(params, head, &state, targets[role], denom);
        chunk.loss += loss;
        head_backward(
            params,
            head,
            &state,
            &cache,
            &dlogits,
            &mut chunk.tail,
            tail_base,
            &mut dstate,
        );
    }
    let mr = inst.mask_index * dim..(inst.mask_index + 1) * dim;
    add_acc(&mut dh[mr], &dstate);
    backward_through_encoder(params, &seq, &dh, chunk);
    if !chunk.loss.is_finite() {
        return Err(Error::NonFinite {
            what: "loss".into(),
            context: format!("verb instance {}", inst.source_id),
        });
    }
    Ok(())
}

fn suffix_instance_backward(
    params: &ModelParams,
    vocab: &Vocab,
    inst: &SuffixTaskInstance,
    denom: f64,
    chunk: &mut ChunkGrad,
) -> Result<()> {
    let seq = forward_sequence(params, vocab, &inst.input_tokens)?;
    let dim = params.layout.enc_dim;
    let n = seq.hidden.n;
    let tail_base = params.layout.embed_end;
    let head = &params.layout.suffix_head;
    let mut dh = vec![0.0; n * dim];
    for i in 0..n {
        if !inst.eligible[i] {
            continue;
        }
        let state = seq.hidden.row(i).to_vec();
        let target = suffix_class(inst.labels[i]);
        let (cache, loss, dlogits) = head_ce(params, head, &state, target, denom);
        chunk.loss += loss;
        head_backward(
            params,
            head,
            &state,
            &cache,
            &dlogits,
            &mut chunk.tail,
            tail_base,
            &mut dh[i * dim..(i + 1) * dim],
        );
    }
    backward_through_encoder(params, &seq, &dh, chunk);
    if !chunk.loss.is_finite() {
        return Err(Error::NonFinite {
            what: "loss".into(),
            context: format!("suffix instance {}", inst.source_id),
        });
    }
    Ok(())
}

fn chunk_ranges(n: usize, chunks: usize) -> Vec<std::ops::Range<usize>> {
    let chunks = chunks.min(n.max(1));
    let base = n / chunks;
    let extra = n % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for i in 0..chunks {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Mean cross-entropy over labeled roles/positions of a batch, plus the
/// gradient over the full parameter view. Ineligible suffix positions
/// contribute nothing.
pub fn loss_and_gradients(
    params: &ModelParams,
    vocab: &Vocab,
    batch: &TaskBatch,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.layout.total];
    let denom = match batch {
        TaskBatch::Verb(insts) => 3 * insts.len(),
        TaskBatch::Suffix(insts) => insts
            .iter()
            .map(|i| i.eligible.iter().filter(|e| **e).count())
            .sum(),
    };
    if denom == 0 || batch.len() == 0 {
        return Ok((0.0, grad));
    }
    let denom = denom as f64;
    let tail_len = params.layout.total - params.layout.embed_end;
    let ranges = chunk_ranges(batch.len(), GRAD_CHUNKS);

    let chunks: Vec<Result<ChunkGrad>> = crate::par::ordered_map(&ranges, |range| {
        let mut chunk = ChunkGrad {
            tail: vec![0.0; tail_len],
            rows: BTreeMap::new(),
            loss: 0.0,
        };
        match batch {
            TaskBatch::Verb(insts) => {
                for inst in &insts[range.clone()] {
                    verb_instance_backward(params, vocab, inst, denom, &mut chunk)?;
                }
            }
            TaskBatch::Suffix(insts) => {
                for inst in &insts[range.clone()] {
                    suffix_instance_backward(params, vocab, inst, denom, &mut chunk)?;
                }
            }
        }
        Ok(chunk)
    });

    let mut loss = 0.0;
    let embed_end = params.layout.embed_end;
    for chunk in chunks {
        let chunk = chunk?;
        loss += chunk.loss;
        add_acc(&mut grad[embed_end..], &chunk.tail);
        let e = params.layout.dims.embed;
        for (row_start, g) in chunk.rows {
            add_acc(&mut grad[row_start..row_start + e], &g);
        }
    }
    Ok((loss, grad))
}
