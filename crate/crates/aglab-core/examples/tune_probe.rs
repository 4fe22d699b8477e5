//! Scratch probe of the single-verb gap (deleted after tuning).

use aglab_core::datasets::{
    apply_ablation_verb, build_verb_task, build_vocab_from_seqs, split_corpus, AblationMode,
    SplitSpec, VOCAB_CAP,
};
use aglab_core::evaluation::verb_metrics;
use aglab_core::grammar::{generate_corpus, GrammarConfig};
use aglab_core::neural::ModelVariant;
use aglab_core::training::{predict_verb, train, TaskKind, TrainConfig, TrainData};

fn main() {
    let grammar = GrammarConfig {
        multi_clause_rate: 0.3,
        ergative_omission_rate: 0.55,
        word_order_shuffle: true,
        seed: 7,
        ..GrammarConfig::default()
    };
    let corpus = generate_corpus(&grammar, 50_000).unwrap();
    let lexicon = corpus.lexicon.clone();
    let split = SplitSpec {
        seed: 7,
        ..SplitSpec::default()
    };
    let (train_s, dev_s, test_s) = split_corpus(corpus.sentences, &split).unwrap();

    for single_verb in [false, true] {
        let t0 = std::time::Instant::now();
        let mut sets = [
            build_verb_task(&train_s, 7).instances,
            build_verb_task(&dev_s, 7).instances,
            build_verb_task(&test_s, 7).instances,
        ];
        if single_verb {
            for s in sets.iter_mut() {
                *s = apply_ablation_verb(std::mem::take(s), AblationMode::SingleVerbFilter, &lexicon)
                    .unwrap();
            }
        }
        let [train_i, dev_i, test_i] = sets;
        let vocab = build_vocab_from_seqs(
            train_i.iter().map(|i| i.input_tokens.as_slice()),
            VOCAB_CAP,
        );
        let mut tc = TrainConfig::new(TaskKind::VerbNumber);
        tc.variant = ModelVariant::Bidirectional;
        tc.seed = 7;
        tc.max_updates = 1_500;
        tc.eval_every = 250;
        tc.patience = 4;
        let outcome = train(
            &tc,
            &TrainData::Verb {
                train: &train_i,
                dev: &dev_i,
            },
            &vocab,
        )
        .unwrap();
        let preds = predict_verb(&outcome.checkpoint, &test_i, &vocab).unwrap();
        let golds: Vec<_> = test_i.iter().map(|i| i.label).collect();
        let m = verb_metrics(&preds, &golds).unwrap();
        eprintln!(
            "single_verb={single_verb}: erg {:.4} abs {:.4} dat {:.4} ({} updates, {:.0}s)",
            m.erg.accuracy.unwrap(),
            m.abs.accuracy.unwrap(),
            m.dat.accuracy.unwrap(),
            outcome.manifest.updates_run,
            t0.elapsed().as_secs_f64()
        );
    }
}
