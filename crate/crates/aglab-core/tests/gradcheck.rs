//! Reverse-mode gradients against the central finite-difference oracle
//! at toy dimensions, over every parameter of the model.

mod common;

use aglab_core::datasets::Vocab;
use aglab_core::neural::{
    loss_and_gradients, Layout, ModelDims, ModelParams, ModelVariant, TaskBatch, VocabSizes,
};
use common::{max_relative_error, numerical_gradient, suffix_fixture, verb_fixture};

const H: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

fn toy_dims() -> ModelDims {
    ModelDims {
        embed: 6,
        hidden: 5,
        head_hidden: 4,
    }
}

fn check(params: &ModelParams, vocab: &Vocab, batch: &TaskBatch, context: &str) -> f64 {
    let (_, analytic) = loss_and_gradients(params, vocab, batch).expect("analytic gradient");
    let numerical = numerical_gradient(params, vocab, batch, H);
    let err = max_relative_error(&analytic, &numerical);
    assert!(
        err < TOLERANCE,
        "{context}: max relative error {err:.3e} exceeds {TOLERANCE:.0e}"
    );
    err
}

#[test]
fn verb_task_gradients_match_finite_differences() {
    for seed in [1u64, 2, 3] {
        let (instances, vocab) = verb_fixture(seed, 20);
        let layout = Layout::new(ModelVariant::Bidirectional, toy_dims(), VocabSizes::of(&vocab));
        let params = ModelParams::init(layout, seed);
        let start = (seed as usize * 3) % (instances.len() - 2);
        let batch = &instances[start..start + 2];
        check(&params, &vocab, &TaskBatch::Verb(batch), &format!("verb seed {seed}"));
    }
}

#[test]
fn suffix_task_gradients_match_finite_differences() {
    for seed in [1u64, 2, 3] {
        let (instances, vocab) = suffix_fixture(seed, 20);
        let layout = Layout::new(ModelVariant::Bidirectional, toy_dims(), VocabSizes::of(&vocab));
        let params = ModelParams::init(layout, seed + 10);
        let start = (seed as usize * 5) % (instances.len() - 2);
        let batch = &instances[start..start + 2];
        check(
            &params,
            &vocab,
            &TaskBatch::Suffix(batch),
            &format!("suffix seed {seed}"),
        );
    }
}

#[test]
fn unidirectional_variant_gradients_match() {
    let (instances, vocab) = verb_fixture(5, 20);
    let layout = Layout::new(ModelVariant::Unidirectional, toy_dims(), VocabSizes::of(&vocab));
    let params = ModelParams::init(layout, 9);
    check(
        &params,
        &vocab,
        &TaskBatch::Verb(&instances[..2]),
        "unidirectional",
    );
}

#[test]
fn word_only_variant_gradients_match() {
    let (instances, vocab) = suffix_fixture(6, 20);
    let layout = Layout::new(ModelVariant::WordOnly, toy_dims(), VocabSizes::of(&vocab));
    let params = ModelParams::init(layout, 11);
    check(
        &params,
        &vocab,
        &TaskBatch::Suffix(&instances[..2]),
        "word-only",
    );
}
