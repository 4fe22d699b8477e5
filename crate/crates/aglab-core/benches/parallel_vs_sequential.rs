//! Parallel vs sequential comparison of the data-parallel stages:
//! corpus generation, batched gradient computation, and test-set
//! prediction. Both paths produce identical results; the bench measures
//! the cost of the fan-out.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use aglab_core::datasets::{build_verb_task, build_vocab_from_seqs, VOCAB_CAP};
use aglab_core::grammar::{generate_corpus, generate_corpus_sequential, GrammarConfig};
use aglab_core::neural::{
    loss_and_gradients, Layout, ModelDims, ModelParams, ModelVariant, TaskBatch, VocabSizes,
};

fn bench_corpus_generation(c: &mut Criterion) {
    let config = GrammarConfig {
        noun_lexicon_size: 200,
        seed: 7,
        ..GrammarConfig::default()
    };
    let mut group = c.benchmark_group("generate_corpus_5k");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(generate_corpus(&config, 5_000).unwrap().sentences.len()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            black_box(
                generate_corpus_sequential(&config, 5_000)
                    .unwrap()
                    .sentences
                    .len(),
            )
        })
    });
    group.finish();
}

fn bench_batch_gradients(c: &mut Criterion) {
    let config = GrammarConfig {
        noun_lexicon_size: 100,
        seed: 11,
        ..GrammarConfig::default()
    };
    let corpus = generate_corpus(&config, 64).unwrap();
    let instances = build_verb_task(&corpus.sentences, 1).instances;
    let vocab =
        build_vocab_from_seqs(instances.iter().map(|i| i.input_tokens.as_slice()), VOCAB_CAP);
    let layout = Layout::new(
        ModelVariant::Bidirectional,
        ModelDims::default(),
        VocabSizes::of(&vocab),
    );
    let params = ModelParams::init(layout, 3);
    let batch = &instances[..32];

    let mut group = c.benchmark_group("verb_batch_gradients_32");
    group.sample_size(10);
    group.bench_function("batch32", |b| {
        b.iter_batched(
            || batch.to_vec(),
            |batch| {
                let (loss, grads) =
                    loss_and_gradients(&params, &vocab, &TaskBatch::Verb(&batch)).unwrap();
                black_box((loss, grads.len()))
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_corpus_generation, bench_batch_gradients);
criterion_main!(benches);
