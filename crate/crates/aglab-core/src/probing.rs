//! Diagnostic classifiers over frozen encoder states.
//!
//! A probe is a small classifier (linear, one-hidden-layer, or the
//! two-layer 100/50 stack) trained on hidden states collected from a
//! trained checkpoint; the main model is never updated. Selection runs
//! several seeded trainings plus the constant majority classifier as a
//! floor candidate and keeps the best probe-dev accuracy, so a reported
//! probe never scores below the majority baseline on its dev split.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{build_suffix_task, Sentence, SuffixTaskInstance, Vocab};
use crate::grammar::{governing_clause, nearest_clause};
use crate::morphology::{LemmaLexicon, NuclearSuffix};
use crate::neural::{encode_tokens, math, Checkpoint};
use crate::rng::substream;
use crate::training::predict_suffix;
use crate::{Error, Result};

/// One probing example: a frozen hidden state, its label, and whether
/// the main model got the suffix right at that position.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub state: Vec<f64>,
    pub label: String,
    pub main_model_correct: bool,
    pub sentence_id: String,
    pub token_index: usize,
}

/// Which positions to collect states over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateSelector {
    /// Positions eligible for the suffix task.
    SuffixEligible,
    /// Positions bearing a gold nuclear suffix.
    NuclearSuffixed,
    AllTokens,
}

/// What the probe predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeLabelKind {
    /// Binary: is the word's closest verb its gold governing verb?
    ClosestVerbConnected,
    /// 3-way nuclear case of suffixed words.
    NuclearCase,
    /// 2-way number of suffixed words.
    Number,
    /// Ergative vs absolutive on `-ak`-suffixed words only.
    AkDisambiguation,
    /// Raw case label (16-way on treebank data), absence included.
    AnyCase,
    Pos,
    DepLabel,
}

impl ProbeLabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeLabelKind::ClosestVerbConnected => "closest-verb-connected",
            ProbeLabelKind::NuclearCase => "nuclear-case",
            ProbeLabelKind::Number => "number",
            ProbeLabelKind::AkDisambiguation => "ak-disambiguation",
            ProbeLabelKind::AnyCase => "any-case",
            ProbeLabelKind::Pos => "pos",
            ProbeLabelKind::DepLabel => "dep-label",
        }
    }
}

fn label_for(
    kind: ProbeLabelKind,
    inst: &SuffixTaskInstance,
    sentence: &Sentence,
    pos: usize,
) -> Result<Option<String>> {
    let tok = &sentence.tokens[pos];
    let missing = |field: &str| {
        Error::MissingAnnotation(format!(
            "probe {:?} needs the {field} field (sentence {}, token {pos})",
            kind.as_str(),
            sentence.id
        ))
    };
    match kind {
        ProbeLabelKind::ClosestVerbConnected => {
            let clauses = inst
                .gold_clauses
                .as_deref()
                .ok_or_else(|| missing("gold_clauses"))?;
            let connected = match governing_clause(clauses, pos) {
                Some(gov) => nearest_clause(clauses, pos) == Some(gov),
                None => false,
            };
            Ok(Some(
                if connected { "connected" } else { "disconnected" }.to_string(),
            ))
        }
        ProbeLabelKind::NuclearCase => match tok.gold_case {
            Some(c) => Ok(Some(c.as_str().to_string())),
            None => Err(missing("gold_case")),
        },
        ProbeLabelKind::Number => match tok.gold_number {
            Some(n) => Ok(Some(n.as_str().to_string())),
            None => Err(missing("gold_number")),
        },
        ProbeLabelKind::AkDisambiguation => {
            if inst.labels[pos] != NuclearSuffix::Ak {
                return Ok(None);
            }
            match tok.gold_case {
                Some(c) => Ok(Some(c.as_str().to_string())),
                None => Err(missing("gold_case")),
            }
        }
        ProbeLabelKind::AnyCase => Ok(Some(
            tok.case_raw
                .clone()
                .or_else(|| tok.gold_case.map(|c| c.as_str().to_string()))
                .unwrap_or_else(|| "none".to_string()),
        )),
        ProbeLabelKind::Pos => match &tok.pos {
            Some(p) => Ok(Some(p.clone())),
            None => Err(missing("pos")),
        },
        ProbeLabelKind::DepLabel => match &tok.dep_label {
            Some(d) => Ok(Some(d.clone())),
            None => Err(missing("dep_label")),
        },
    }
}

/// Run the checkpoint over the sentences (through the suffix-task
/// input rendering) and collect one record per selected position.
/// `main_model_correct` comes from the model's suffix prediction.
pub fn collect_states(
    checkpoint: &Checkpoint,
    sentences: &[Sentence],
    lexicon: &LemmaLexicon,
    vocab: &Vocab,
    selector: StateSelector,
    kind: ProbeLabelKind,
) -> Result<Vec<ProbeRecord>> {
    checkpoint.require_vocab(vocab)?;
    let instances = build_suffix_task(sentences, lexicon);
    let preds = predict_suffix(checkpoint, &instances, vocab)?;
    let states = crate::par::ordered_map(&instances, |inst| {
        encode_tokens(&checkpoint.params, vocab, &inst.input_tokens)
    });

    let mut records = Vec::new();
    for ((sentence, inst), (pred, hidden)) in sentences
        .iter()
        .zip(&instances)
        .zip(preds.iter().zip(states))
    {
        let hidden = hidden?;
        for pos in 0..sentence.tokens.len() {
            let selected = match selector {
                StateSelector::AllTokens => true,
                StateSelector::SuffixEligible => inst.eligible[pos],
                StateSelector::NuclearSuffixed => {
                    inst.eligible[pos] && !inst.labels[pos].is_none()
                }
            };
            if !selected {
                continue;
            }
            let Some(label) = label_for(kind, inst, sentence, pos)? else {
                continue;
            };
            records.push(ProbeRecord {
                state: hidden.row(pos).to_vec(),
                label,
                main_model_correct: pred[pos] == inst.labels[pos],
                sentence_id: sentence.id.clone(),
                token_index: pos,
            });
        }
    }
    Ok(records)
}

/// Probe architectures: linear, one hidden layer (width configurable),
/// or two hidden layers of sizes 100 and 50.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeArch {
    Linear,
    Mlp1 { hidden: usize },
    Mlp2,
}

impl ProbeArch {
    pub fn mlp1_default() -> Self {
        ProbeArch::Mlp1 { hidden: 128 }
    }

    fn layer_dims(self, input: usize, classes: usize) -> Vec<usize> {
        match self {
            ProbeArch::Linear => vec![input, classes],
            ProbeArch::Mlp1 { hidden } => vec![input, hidden, classes],
            ProbeArch::Mlp2 => vec![input, 100, 50, classes],
        }
    }

    pub fn name(self) -> String {
        match self {
            ProbeArch::Linear => "linear".into(),
            ProbeArch::Mlp1 { hidden } => format!("mlp1-{hidden}"),
            ProbeArch::Mlp2 => "mlp2-100-50".into(),
        }
    }
}

/// A fully-connected tanh stack with its own flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
struct SmallNet {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl SmallNet {
    fn n_params(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    fn init(dims: Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        let mut values = vec![0.0; Self::n_params(&dims)];
        let mut off = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for v in &mut values[off..off + w[1] * w[0]] {
                *v = rng.random_range(-bound..bound);
            }
            off += w[1] * w[0] + w[1]; // biases stay zero
        }
        Self { dims, values }
    }

    /// Forward pass caching layer activations (input first).
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let n_layers = self.dims.len() - 1;
        for (li, w) in self.dims.windows(2).enumerate() {
            let (rows, cols) = (w[1], w[0]);
            let weights = &self.values[off..off + rows * cols];
            let biases = &self.values[off + rows * cols..off + rows * cols + rows];
            let mut out = biases.to_vec();
            math::matvec_acc(weights, rows, cols, acts.last().unwrap(), &mut out);
            if li + 1 < n_layers {
                for v in out.iter_mut() {
                    *v = v.tanh();
                }
            }
            acts.push(out);
            off += rows * cols + rows;
        }
        acts
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().unwrap()
    }

    fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (i, v) in logits.iter().enumerate().skip(1) {
            if *v > logits[best] {
                best = i;
            }
        }
        best
    }

    /// Accumulate the cross-entropy gradient for one example.
    fn backward(&self, acts: &[Vec<f64>], target: usize, scale: f64, grad: &mut [f64]) {
        let n_layers = self.dims.len() - 1;
        let mut dout = acts.last().unwrap().clone();
        math::softmax_in_place(&mut dout);
        dout[target] -= 1.0;
        for v in dout.iter_mut() {
            *v *= scale;
        }
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.dims.windows(2) {
            offsets.push(off);
            off += w[1] * w[0] + w[1];
        }
        for li in (0..n_layers).rev() {
            let (cols, rows) = (self.dims[li], self.dims[li + 1]);
            let off = offsets[li];
            let x = &acts[li];
            math::outer_acc(&mut grad[off..off + rows * cols], rows, cols, &dout, x);
            math::add_acc(&mut grad[off + rows * cols..off + rows * cols + rows], &dout);
            if li > 0 {
                let weights = &self.values[off..off + rows * cols];
                let mut dx = vec![0.0; cols];
                math::matvec_t_acc(weights, rows, cols, &dout, &mut dx);
                for (d, a) in dx.iter_mut().zip(&acts[li]) {
                    *d *= 1.0 - a * a; // through the tanh
                }
                dout = dx;
            }
        }
    }
}

/// Either a trained network or the constant majority classifier.
#[derive(Debug, Clone, PartialEq)]
enum ProbeModel {
    Net(SmallNet),
    Majority(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRunLog {
    pub seed_index: u32,
    pub dev_accuracy: f64,
}

/// The selected probe plus its selection log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedProbe {
    pub arch: ProbeArch,
    pub classes: Vec<String>,
    pub dev_accuracy: f64,
    /// Dev accuracy of the constant majority classifier (the selection
    /// floor).
    pub majority_dev_accuracy: f64,
    pub runs: Vec<ProbeRunLog>,
    pub selected_majority: bool,
    model: ProbeModel,
}

impl TrainedProbe {
    pub fn predict(&self, state: &[f64]) -> &str {
        let idx = match &self.model {
            ProbeModel::Net(net) => net.predict(state),
            ProbeModel::Majority(c) => *c,
        };
        &self.classes[idx]
    }
}

const PROBE_EPOCHS: usize = 20;
const PROBE_BATCH: usize = 64;

fn class_table(records: &[ProbeRecord]) -> Vec<String> {
    let mut classes: Vec<String> = records.iter().map(|r| r.label.clone()).collect();
    classes.sort();
    classes.dedup();
    classes
}

fn majority_class(labels: &[usize], n_classes: usize) -> (usize, usize) {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (i, c) in counts.iter().enumerate().skip(1) {
        if *c > counts[best] {
            best = i;
        }
    }
    (best, counts[best])
}

fn train_one_net(
    records: &[ProbeRecord],
    labels: &[usize],
    train_idx: &[usize],
    dev_idx: &[usize],
    dims: Vec<usize>,
    seed: u64,
) -> (SmallNet, f64) {
    let mut rng = substream(seed, "probe-init");
    let mut net = SmallNet::init(dims, &mut rng);
    let mut adam = crate::neural::AdamState::new(net.values.len(), Default::default());
    let mut order: Vec<usize> = train_idx.to_vec();
    let mut best: Option<(f64, SmallNet)> = None;
    for _epoch in 0..PROBE_EPOCHS {
        order.shuffle(&mut rng);
        for chunk in order.chunks(PROBE_BATCH) {
            let mut grad = vec![0.0; net.values.len()];
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let acts = net.forward(&records[i].state);
                net.backward(&acts, labels[i], scale, &mut grad);
            }
            let _ = crate::neural::adam_step(&mut net.values, &grad, &mut adam);
        }
        let acc = accuracy_on(&net, records, labels, dev_idx);
        if best.as_ref().map(|(b, _)| acc > *b).unwrap_or(true) {
            best = Some((acc, net.clone()));
        }
    }
    let (acc, net) = best.expect("at least one epoch");
    (net, acc)
}

fn accuracy_on(net: &SmallNet, records: &[ProbeRecord], labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let correct: usize = crate::par::ordered_map(idx, |&i| {
        usize::from(net.predict(&records[i].state) == labels[i])
    })
    .into_iter()
    .sum();
    correct as f64 / idx.len() as f64
}

/// Train `seeds` probes on an 80/20 split of the records and return the
/// best by probe-dev accuracy, with the majority classifier as a floor
/// candidate. The main model's parameters are untouched: records hold
/// fixed state vectors.
pub fn train_probe(
    records: &[ProbeRecord],
    arch: ProbeArch,
    seeds: u32,
    seed: u64,
) -> Result<TrainedProbe> {
    if records.is_empty() {
        return Err(Error::DegenerateProbe("no probing records".into()));
    }
    let classes = class_table(records);
    if classes.len() < 2 {
        return Err(Error::DegenerateProbe(format!(
            "only one label class ({:?}) in the records",
            classes.first().map(String::as_str).unwrap_or("")
        )));
    }
    let class_idx: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let labels: Vec<usize> = records.iter().map(|r| class_idx[r.label.as_str()]).collect();

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut substream(seed, "probe-split"));
    let n_train = ((records.len() as f64) * 0.8).round() as usize;
    let n_train = n_train.clamp(1, records.len() - 1);
    let (train_idx, dev_idx) = order.split_at(n_train);

    let input_dim = records[0].state.len();
    let dims = arch.layer_dims(input_dim, classes.len());

    let mut runs = Vec::with_capacity(seeds as usize);
    let mut best: Option<(f64, SmallNet)> = None;
    for s in 0..seeds.max(1) {
        let (net, acc) = train_one_net(
            records,
            &labels,
            train_idx,
            dev_idx,
            dims.clone(),
            crate::rng::subseed(seed, s as u64),
        );
        runs.push(ProbeRunLog {
            seed_index: s,
            dev_accuracy: acc,
        });
        if best.as_ref().map(|(b, _)| acc > *b).unwrap_or(true) {
            best = Some((acc, net));
        }
    }
    let (net_acc, net) = best.expect("seeds >= 1");

    // majority floor over the dev split
    let (maj_class, _) = majority_class(&labels, classes.len());
    let maj_dev_acc = if dev_idx.is_empty() {
        0.0
    } else {
        dev_idx.iter().filter(|&&i| labels[i] == maj_class).count() as f64 / dev_idx.len() as f64
    };

    let (model, dev_accuracy, selected_majority) = if maj_dev_acc > net_acc {
        (ProbeModel::Majority(maj_class), maj_dev_acc, true)
    } else {
        (ProbeModel::Net(net), net_acc, false)
    };
    Ok(TrainedProbe {
        arch,
        classes,
        dev_accuracy,
        majority_dev_accuracy: maj_dev_acc,
        runs,
        selected_majority,
        model,
    })
}

/// An accuracy cell with its exact counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAccuracy {
    pub n: usize,
    pub n_correct: usize,
    pub accuracy: Option<f64>,
}

impl SubsetAccuracy {
    fn from_counts(n: usize, n_correct: usize) -> Self {
        Self {
            n,
            n_correct,
            accuracy: if n == 0 {
                None
            } else {
                Some(n_correct as f64 / n as f64)
            },
        }
    }
}

/// Probe accuracy total and split by main-model correctness, next to
/// the majority baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialReport {
    pub arch: String,
    pub total: SubsetAccuracy,
    pub main_correct_subset: SubsetAccuracy,
    pub main_wrong_subset: SubsetAccuracy,
    pub majority: SubsetAccuracy,
}

impl DifferentialReport {
    /// The exact identity total = correct-subset + wrong-subset, on
    /// counts rather than floats.
    pub fn subset_identity_holds(&self) -> bool {
        self.total.n == self.main_correct_subset.n + self.main_wrong_subset.n
            && self.total.n_correct
                == self.main_correct_subset.n_correct + self.main_wrong_subset.n_correct
    }
}

pub fn differential_report(probe: &TrainedProbe, records: &[ProbeRecord]) -> DifferentialReport {
    let mut total = (0usize, 0usize);
    let mut on_correct = (0usize, 0usize);
    let mut on_wrong = (0usize, 0usize);
    let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        let hit = probe.predict(&r.state) == r.label;
        total.0 += 1;
        total.1 += usize::from(hit);
        let cell = if r.main_model_correct {
            &mut on_correct
        } else {
            &mut on_wrong
        };
        cell.0 += 1;
        cell.1 += usize::from(hit);
        *label_counts.entry(r.label.as_str()).or_insert(0) += 1;
    }
    let majority_count = label_counts.values().copied().max().unwrap_or(0);
    DifferentialReport {
        arch: probe.arch.name(),
        total: SubsetAccuracy::from_counts(total.0, total.1),
        main_correct_subset: SubsetAccuracy::from_counts(on_correct.0, on_correct.1),
        main_wrong_subset: SubsetAccuracy::from_counts(on_wrong.0, on_wrong.1),
        majority: SubsetAccuracy::from_counts(total.0, majority_count),
    }
}

/// One property row of the generalization suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationEntry {
    pub property: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DifferentialReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub n_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub entries: Vec<GeneralizationEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct GeneralizationConfig {
    pub seeds: u32,
    pub seed: u64,
    /// Deterministic cap on record count per property (keeps probe
    /// training tractable on large corpora).
    pub max_records: usize,
}

impl Default for GeneralizationConfig {
    fn default() -> Self {
        Self {
            seeds: 5,
            seed: 0,
            max_records: 20_000,
        }
    }
}

/// Probe the checkpoint for number, nuclear case, `-ak` disambiguation,
/// any-case, POS, and dependency-label decodability, with the two-layer
/// architecture. Properties whose annotation layer is missing are
/// skipped with a notice.
pub fn generalization_suite(
    checkpoint: &Checkpoint,
    sentences: &[Sentence],
    lexicon: &LemmaLexicon,
    vocab: &Vocab,
    config: &GeneralizationConfig,
) -> Result<GeneralizationReport> {
    let plan: [(ProbeLabelKind, StateSelector); 6] = [
        (ProbeLabelKind::Number, StateSelector::NuclearSuffixed),
        (ProbeLabelKind::NuclearCase, StateSelector::NuclearSuffixed),
        (
            ProbeLabelKind::AkDisambiguation,
            StateSelector::NuclearSuffixed,
        ),
        (ProbeLabelKind::AnyCase, StateSelector::AllTokens),
        (ProbeLabelKind::Pos, StateSelector::AllTokens),
        (ProbeLabelKind::DepLabel, StateSelector::AllTokens),
    ];
    let mut entries = Vec::with_capacity(plan.len());
    for (kind, selector) in plan {
        let collected = collect_states(checkpoint, sentences, lexicon, vocab, selector, kind);
        let entry = match collected {
            Ok(mut records) => {
                records.truncate(config.max_records);
                match train_probe(&records, ProbeArch::Mlp2, config.seeds, config.seed) {
                    Ok(probe) => GeneralizationEntry {
                        property: kind.as_str().to_string(),
                        report: Some(differential_report(&probe, &records)),
                        skipped: None,
                        n_records: records.len(),
                    },
                    Err(e) => GeneralizationEntry {
                        property: kind.as_str().to_string(),
                        report: None,
                        skipped: Some(e.to_string()),
                        n_records: records.len(),
                    },
                }
            }
            Err(Error::MissingAnnotation(msg)) => GeneralizationEntry {
                property: kind.as_str().to_string(),
                report: None,
                skipped: Some(msg),
                n_records: 0,
            },
            Err(other) => return Err(other),
        };
        entries.push(entry);
    }
    Ok(GeneralizationReport { entries })
}

// ---------------------------------------------------------------------------
// Binary state-dump persistence
// ---------------------------------------------------------------------------

const DUMP_MAGIC: [u8; 4] = *b"AGPR";
const DUMP_VERSION: u32 = 1;

/// Persist records (header: dim and count; label table; little-endian
/// f64 state rows) so probing can run without re-encoding.
pub fn write_probe_records(path: &Path, records: &[ProbeRecord]) -> Result<()> {
    let dim = records.first().map(|r| r.state.len()).unwrap_or(0);
    if records.iter().any(|r| r.state.len() != dim) {
        return Err(Error::InvalidInput(
            "probe records disagree on state dimension".into(),
        ));
    }
    let classes = class_table(records);
    let class_idx: BTreeMap<&str, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as u32))
        .collect();

    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&DUMP_MAGIC)?;
    out.write_all(&DUMP_VERSION.to_le_bytes())?;
    out.write_all(&(dim as u32).to_le_bytes())?;
    out.write_all(&(records.len() as u64).to_le_bytes())?;
    out.write_all(&(classes.len() as u32).to_le_bytes())?;
    for c in &classes {
        out.write_all(&(c.len() as u32).to_le_bytes())?;
        out.write_all(c.as_bytes())?;
    }
    for r in records {
        for v in &r.state {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&class_idx[r.label.as_str()].to_le_bytes())?;
        out.write_all(&[u8::from(r.main_model_correct)])?;
        out.write_all(&(r.sentence_id.len() as u32).to_le_bytes())?;
        out.write_all(r.sentence_id.as_bytes())?;
        out.write_all(&(r.token_index as u32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_probe_records(path: &Path) -> Result<Vec<ProbeRecord>> {
    let mut inp = BufReader::new(std::fs::File::open(path)?);
    let bad = |msg: &str| Error::Checkpoint(format!("{}: {msg}", path.display()));
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if magic != DUMP_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    inp.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != DUMP_VERSION {
        return Err(bad("unsupported version"));
    }
    inp.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    inp.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    inp.read_exact(&mut b4)?;
    let n_classes = u32::from_le_bytes(b4) as usize;
    let mut classes = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        inp.read_exact(&mut b4)?;
        let len = u32::from_le_bytes(b4) as usize;
        let mut buf = vec![0u8; len];
        inp.read_exact(&mut buf)?;
        classes.push(String::from_utf8(buf).map_err(|_| bad("label is not utf-8"))?);
    }
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let mut state = vec![0.0f64; dim];
        for v in state.iter_mut() {
            inp.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        inp.read_exact(&mut b4)?;
        let label_idx = u32::from_le_bytes(b4) as usize;
        let label = classes
            .get(label_idx)
            .ok_or_else(|| bad("label index out of range"))?
            .clone();
        let mut b1 = [0u8; 1];
        inp.read_exact(&mut b1)?;
        inp.read_exact(&mut b4)?;
        let id_len = u32::from_le_bytes(b4) as usize;
        let mut id_buf = vec![0u8; id_len];
        inp.read_exact(&mut id_buf)?;
        inp.read_exact(&mut b4)?;
        records.push(ProbeRecord {
            state,
            label,
            main_model_correct: b1[0] != 0,
            sentence_id: String::from_utf8(id_buf).map_err(|_| bad("id is not utf-8"))?,
            token_index: u32::from_le_bytes(b4) as usize,
        });
    }
    Ok(records)
}
