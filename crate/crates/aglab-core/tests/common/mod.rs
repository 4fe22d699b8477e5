//! Shared helpers for the integration suites: the central
//! finite-difference gradient oracle and small fixture builders.

use aglab_core::datasets::{
    build_suffix_task, build_verb_task, build_vocab_from_seqs, SuffixTaskInstance,
    VerbTaskInstance, Vocab, VOCAB_CAP,
};
use aglab_core::grammar::{generate_corpus, Corpus, GrammarConfig};
use aglab_core::neural::{loss_and_gradients, ModelParams, TaskBatch};

/// Central finite differences over every parameter (the independent
/// oracle for reverse-mode gradients). Uses the loss path only.
pub fn numerical_gradient(
    params: &ModelParams,
    vocab: &Vocab,
    batch: &TaskBatch,
    h: f64,
) -> Vec<f64> {
    let mut probe = params.clone();
    let n = probe.values.len();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let orig = probe.values[i];
        probe.values[i] = orig + h;
        let (up, _) = loss_and_gradients(&probe, vocab, batch).expect("loss at +h");
        probe.values[i] = orig - h;
        let (down, _) = loss_and_gradients(&probe, vocab, batch).expect("loss at -h");
        probe.values[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Worst relative disagreement between the analytic and numerical
/// gradients. The denominator is floored at 1e-5: below that scale the
/// f64 central difference is dominated by cancellation noise, and
/// parameters the loss does not touch at all agree exactly on both
/// sides (0 vs 0).
pub fn max_relative_error(analytic: &[f64], numerical: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numerical)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-5))
        .fold(0.0, f64::max)
}

pub fn small_corpus(seed: u64, n: usize) -> Corpus {
    let config = GrammarConfig {
        noun_lexicon_size: 12,
        seed,
        ..GrammarConfig::default()
    };
    generate_corpus(&config, n).expect("valid config")
}

pub fn verb_fixture(seed: u64, n_sentences: usize) -> (Vec<VerbTaskInstance>, Vocab) {
    let corpus = small_corpus(seed, n_sentences);
    let instances = build_verb_task(&corpus.sentences, seed).instances;
    let vocab = build_vocab_from_seqs(
        instances.iter().map(|i| i.input_tokens.as_slice()),
        VOCAB_CAP,
    );
    (instances, vocab)
}

pub fn suffix_fixture(seed: u64, n_sentences: usize) -> (Vec<SuffixTaskInstance>, Vocab) {
    let corpus = small_corpus(seed, n_sentences);
    let instances = build_suffix_task(&corpus.sentences, &corpus.lexicon);
    let vocab = build_vocab_from_seqs(
        instances.iter().map(|i| i.input_tokens.as_slice()),
        VOCAB_CAP,
    );
    (instances, vocab)
}
