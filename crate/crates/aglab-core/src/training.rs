//! End-to-end training with dev-based early stopping and run manifests.
//!
//! Model selection: the verb task selects on the mean of the three
//! per-role accuracies, the suffix task on macro-F1 over the five
//! suffix classes. Training stops at `max_updates` or once the dev
//! metric has failed to improve for `patience` consecutive evaluations;
//! the best-dev parameters are returned. Fully deterministic given the
//! config seed.

use std::io::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datasets::{AblationMode, SuffixTaskInstance, VerbTaskInstance, Vocab};
use crate::evaluation::{suffix_metrics, verb_metrics};
use crate::grammar::AgreementTriple;
use crate::morphology::NuclearSuffix;
use crate::neural::{
    adam_step, forward_sequence, loss_and_gradients, suffix_class_value, suffix_probs,
    verb_class_value, verb_probs, AdamHyper, AdamState, Checkpoint, Layout, ModelDims,
    ModelParams, ModelVariant, TaskBatch, VocabSizes,
};
use crate::rng::substream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "verb", alias = "verb-number")]
    VerbNumber,
    #[serde(rename = "suffix", alias = "suffix-recovery")]
    SuffixRecovery,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::VerbNumber => "verb",
            TaskKind::SuffixRecovery => "suffix",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verb" | "verb-number" => Ok(TaskKind::VerbNumber),
            "suffix" | "suffix-recovery" => Ok(TaskKind::SuffixRecovery),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub ablations: Vec<AblationMode>,
    pub variant: ModelVariant,
    pub dims: ModelDims,
    pub max_updates: u64,
    pub eval_every: u64,
    pub patience: u32,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamHyper,
}

impl TrainConfig {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            ablations: Vec::new(),
            variant: ModelVariant::Bidirectional,
            dims: ModelDims::default(),
            max_updates: 20_000,
            eval_every: 2_000,
            patience: 5,
            batch_size: 32,
            seed: 0,
            adam: AdamHyper::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.eval_every < 1 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.dims.embed == 0 || self.dims.hidden == 0 || self.dims.head_hidden == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: u64,
    pub metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxUpdates,
    Patience,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub data_hash: String,
    pub vocab_hash: String,
    pub n_train: usize,
    pub n_dev: usize,
    pub evals: Vec<EvalPoint>,
    pub best_step: u64,
    pub best_metric: f64,
    pub updates_run: u64,
    pub stop_reason: StopReason,
    /// Not covered by determinism comparisons.
    pub wall_clock_secs: f64,
}

impl RunManifest {
    /// The append-only metric log as TSV (step, metric, value).
    pub fn write_metrics_tsv(&self, path: &Path) -> Result<()> {
        let metric = match self.config.task {
            TaskKind::VerbNumber => "dev_mean_role_accuracy",
            TaskKind::SuffixRecovery => "dev_macro_f1",
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for e in &self.evals {
            writeln!(out, "{}\t{}\t{:.6}", e.step, metric, e.metric)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Training and dev sets for one task.
pub enum TrainData<'a> {
    Verb {
        train: &'a [VerbTaskInstance],
        dev: &'a [VerbTaskInstance],
    },
    Suffix {
        train: &'a [SuffixTaskInstance],
        dev: &'a [SuffixTaskInstance],
    },
}

impl TrainData<'_> {
    fn n_train(&self) -> usize {
        match self {
            TrainData::Verb { train, .. } => train.len(),
            TrainData::Suffix { train, .. } => train.len(),
        }
    }

    fn n_dev(&self) -> usize {
        match self {
            TrainData::Verb { dev, .. } => dev.len(),
            TrainData::Suffix { dev, .. } => dev.len(),
        }
    }

    fn train_len_at(&self, i: usize) -> usize {
        match self {
            TrainData::Verb { train, .. } => train[i].input_tokens.len(),
            TrainData::Suffix { train, .. } => train[i].input_tokens.len(),
        }
    }

    fn matches_task(&self, task: TaskKind) -> bool {
        matches!(
            (self, task),
            (TrainData::Verb { .. }, TaskKind::VerbNumber)
                | (TrainData::Suffix { .. }, TaskKind::SuffixRecovery)
        )
    }

    fn data_hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        match self {
            TrainData::Verb { train, dev } => {
                for inst in train.iter().chain(dev.iter()) {
                    eat(inst.source_id.as_bytes());
                    eat(&(inst.mask_index as u64).to_le_bytes());
                }
            }
            TrainData::Suffix { train, dev } => {
                for inst in train.iter().chain(dev.iter()) {
                    eat(inst.source_id.as_bytes());
                    eat(&(inst.labels.len() as u64).to_le_bytes());
                }
            }
        }
        format!("{h:016x}")
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub manifest: RunManifest,
}

/// Length-bucketed, seeded batch order for one epoch.
fn epoch_batches(
    data: &TrainData,
    batch_size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let n = data.n_train();
    let mut buckets: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        buckets.entry(data.train_len_at(i)).or_default().push(i);
    }
    let mut batches = Vec::new();
    for bucket in buckets.values_mut() {
        bucket.shuffle(rng);
        for chunk in bucket.chunks(batch_size) {
            batches.push(chunk.to_vec());
        }
    }
    batches.shuffle(rng);
    batches
}

fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}

fn predict_verb_with_params(
    params: &ModelParams,
    vocab: &Vocab,
    instances: &[VerbTaskInstance],
) -> Result<Vec<AgreementTriple>> {
    let results = crate::par::ordered_map(instances, |inst| -> Result<AgreementTriple> {
        let seq = forward_sequence(params, vocab, &inst.input_tokens)?;
        let probs = verb_probs(params, seq.hidden.row(inst.mask_index))?;
        Ok(AgreementTriple {
            erg: verb_class_value(argmax_first(&probs[0])),
            abs: verb_class_value(argmax_first(&probs[1])),
            dat: verb_class_value(argmax_first(&probs[2])),
        })
    });
    results.into_iter().collect()
}

fn predict_suffix_with_params(
    params: &ModelParams,
    vocab: &Vocab,
    instances: &[SuffixTaskInstance],
) -> Result<Vec<Vec<NuclearSuffix>>> {
    let results = crate::par::ordered_map(instances, |inst| -> Result<Vec<NuclearSuffix>> {
        let seq = forward_sequence(params, vocab, &inst.input_tokens)?;
        Ok(suffix_probs(params, &seq.hidden)
            .iter()
            .map(|row| suffix_class_value(argmax_first(row)))
            .collect())
    });
    results.into_iter().collect()
}

/// Per-role argmax predictions for masked-verb instances; ties resolve
/// in the fixed class order Sg < Pl < None.
pub fn predict_verb(
    checkpoint: &Checkpoint,
    instances: &[VerbTaskInstance],
    vocab: &Vocab,
) -> Result<Vec<AgreementTriple>> {
    checkpoint.require_vocab(vocab)?;
    predict_verb_with_params(&checkpoint.params, vocab, instances)
}

/// Per-token 6-way argmax predictions; ties resolve in the fixed class
/// order A < Ak < Ek < Ari < Ei < None. Predictions are emitted for
/// ineligible positions too; scoring excludes them.
pub fn predict_suffix(
    checkpoint: &Checkpoint,
    instances: &[SuffixTaskInstance],
    vocab: &Vocab,
) -> Result<Vec<Vec<NuclearSuffix>>> {
    checkpoint.require_vocab(vocab)?;
    predict_suffix_with_params(&checkpoint.params, vocab, instances)
}

fn dev_metric(params: &ModelParams, vocab: &Vocab, data: &TrainData) -> Result<f64> {
    match data {
        TrainData::Verb { dev, .. } => {
            let preds = predict_verb_with_params(params, vocab, dev)?;
            let golds: Vec<AgreementTriple> = dev.iter().map(|i| i.label).collect();
            Ok(verb_metrics(&preds, &golds)?.mean_accuracy())
        }
        TrainData::Suffix { dev, .. } => {
            let preds = predict_suffix_with_params(params, vocab, dev)?;
            let mut flat_p = Vec::new();
            let mut flat_g = Vec::new();
            let mut flat_e = Vec::new();
            for (inst, p) in dev.iter().zip(&preds) {
                flat_p.extend_from_slice(p);
                flat_g.extend_from_slice(&inst.labels);
                flat_e.extend_from_slice(&inst.eligible);
            }
            Ok(suffix_metrics(&flat_p, &flat_g, &flat_e)?.macro_f1)
        }
    }
}

/// Train to the configured stopping rule and return the best-dev
/// checkpoint with its manifest.
pub fn train(config: &TrainConfig, data: &TrainData, vocab: &Vocab) -> Result<TrainOutcome> {
    config.validate()?;
    if !data.matches_task(config.task) {
        return Err(Error::Config(
            "training data does not match the configured task".into(),
        ));
    }
    if data.n_train() == 0 || data.n_dev() == 0 {
        return Err(Error::InvalidInput(
            "training and dev sets must be non-empty".into(),
        ));
    }
    let started = std::time::Instant::now();
    let layout = Layout::new(config.variant, config.dims, VocabSizes::of(vocab));
    let mut params = ModelParams::init(layout, config.seed);
    let mut adam = AdamState::new(params.layout.total, config.adam);
    let mut batch_rng = substream(config.seed, "batches");

    let mut evals: Vec<EvalPoint> = Vec::new();
    let mut best: Option<(f64, u64, Vec<f64>)> = None;
    let mut stale_evals = 0u32;
    let mut step = 0u64;
    let mut stop_reason = StopReason::MaxUpdates;

    'training: while step < config.max_updates {
        let batches = epoch_batches(data, config.batch_size, &mut batch_rng);
        for batch_idx in batches {
            let loss_result = match data {
                TrainData::Verb { train, .. } => {
                    let batch: Vec<VerbTaskInstance> =
                        batch_idx.iter().map(|&i| train[i].clone()).collect();
                    loss_and_gradients(&params, vocab, &TaskBatch::Verb(&batch))
                }
                TrainData::Suffix { train, .. } => {
                    let batch: Vec<SuffixTaskInstance> =
                        batch_idx.iter().map(|&i| train[i].clone()).collect();
                    loss_and_gradients(&params, vocab, &TaskBatch::Suffix(&batch))
                }
            };
            let (_, grads) = loss_result.map_err(|e| at_step(e, step + 1))?;
            adam_step(&mut params.values, &grads, &mut adam).map_err(|e| at_step(e, step + 1))?;
            step += 1;

            if step % config.eval_every == 0 {
                let metric = dev_metric(&params, vocab, data)?;
                evals.push(EvalPoint { step, metric });
                let improved = best.as_ref().map(|(m, _, _)| metric > *m).unwrap_or(true);
                if improved {
                    best = Some((metric, step, params.values.clone()));
                    stale_evals = 0;
                } else {
                    stale_evals += 1;
                    if stale_evals >= config.patience {
                        stop_reason = StopReason::Patience;
                        break 'training;
                    }
                }
            }
            if step >= config.max_updates {
                break 'training;
            }
        }
    }

    // runs shorter than eval_every still select a checkpoint
    if best.is_none() {
        let metric = dev_metric(&params, vocab, data)?;
        evals.push(EvalPoint { step, metric });
        best = Some((metric, step, params.values.clone()));
    }
    let (best_metric, best_step, best_values) = best.expect("at least one evaluation");
    let best_params = ModelParams {
        layout: params.layout.clone(),
        values: best_values,
    };
    best_params.assert_finite()?;

    let manifest = RunManifest {
        config: config.clone(),
        data_hash: data.data_hash(),
        vocab_hash: vocab.hash_hex(),
        n_train: data.n_train(),
        n_dev: data.n_dev(),
        evals,
        best_step,
        best_metric,
        updates_run: step,
        stop_reason,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        checkpoint: Checkpoint::new(best_params, best_step, vocab),
        manifest,
    })
}

fn at_step(e: Error, step: u64) -> Error {
    match e {
        Error::NonFinite { what, context } => Error::NonFinite {
            what,
            context: format!("{context}; update {step}"),
        },
        other => other,
    }
}
