//! Reproducible experiment pipelines over run directories.
//!
//! A run directory holds everything one invocation produced: the config
//! snapshot, corpus files, lexicon, vocabulary, checkpoints, metrics,
//! and reports. All randomness flows from the single config seed
//! through named sub-streams (corpus, lexicon, mask, split, init,
//! batches, probe), so re-running with the same config and seed yields
//! byte-identical metrics files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{
    apply_ablation_suffix, apply_ablation_verb, build_suffix_task, build_verb_task,
    build_vocab_from_seqs, split_corpus, write_corpus_jsonl, AblationMode, Sentence, SplitSpec,
    SuffixTaskInstance, VerbTaskInstance, Vocab, VOCAB_CAP,
};
use crate::evaluation::{
    closest_verb_split, render_hardcase_table, render_suffix_detail, render_suffix_table,
    render_verb_table, suffix_metrics, verb_metrics, HardCaseReport, SuffixMetrics, VerbMetrics,
};
use crate::grammar::{corpus_stats, generate_corpus, Corpus, CorpusStats, GrammarConfig};
use crate::morphology::LemmaLexicon;
use crate::neural::{Checkpoint, ModelDims, ModelVariant};
use crate::probing::{
    collect_states, differential_report, generalization_suite, train_probe, DifferentialReport,
    GeneralizationConfig, GeneralizationReport, ProbeArch, ProbeLabelKind, StateSelector,
};
use crate::training::{train, RunManifest, TaskKind, TrainConfig, TrainData};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub variant: ModelVariant,
    pub dims: ModelDims,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            variant: ModelVariant::Bidirectional,
            dims: ModelDims::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub max_updates: u64,
    pub eval_every: u64,
    pub patience: u32,
    pub batch_size: usize,
    pub adam: crate::neural::AdamHyper,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            max_updates: 20_000,
            eval_every: 2_000,
            patience: 5,
            batch_size: 32,
            adam: Default::default(),
        }
    }
}

/// Declarative description of one full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub sentence_count: usize,
    pub task: TaskKind,
    #[serde(default)]
    pub ablations: Vec<AblationMode>,
    #[serde(default)]
    pub grammar: GrammarConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
}

impl PipelineConfig {
    pub fn new(task: TaskKind, sentence_count: usize, seed: u64) -> Self {
        Self {
            seed,
            sentence_count,
            task,
            ablations: Vec::new(),
            grammar: GrammarConfig::default(),
            split: SplitSpec::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sentence_count == 0 {
            return Err(Error::Config("sentence_count must be positive".into()));
        }
        if self.task == TaskKind::VerbNumber && self.ablations.contains(&AblationMode::NoVerb) {
            return Err(Error::Config(
                "the no-verb ablation applies only to the suffix task".into(),
            ));
        }
        self.grammar.validate()?;
        self.split.validate()?;
        Ok(())
    }

    /// Condition label used in reports ("base" or the ablation list).
    pub fn condition(&self) -> String {
        if self.ablations.is_empty() {
            match self.model.variant {
                ModelVariant::Bidirectional => "base".to_string(),
                ModelVariant::Unidirectional => "unidirectional".to_string(),
                ModelVariant::WordOnly => "word-only".to_string(),
            }
        } else {
            self.ablations
                .iter()
                .map(|a| a.as_str())
                .collect::<Vec<_>>()
                .join("+")
        }
    }

    fn seeded_grammar(&self) -> GrammarConfig {
        GrammarConfig {
            seed: self.seed,
            ..self.grammar.clone()
        }
    }

    fn seeded_split(&self) -> SplitSpec {
        SplitSpec {
            seed: self.seed,
            ..self.split
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            task: self.task,
            ablations: self.ablations.clone(),
            variant: self.model.variant,
            dims: self.model.dims,
            max_updates: self.train.max_updates,
            eval_every: self.train.eval_every,
            patience: self.train.patience,
            batch_size: self.train.batch_size,
            seed: self.seed,
            adam: self.train.adam,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: PipelineConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

/// Fixed layout of one run directory.
#[derive(Debug, Clone)]
pub struct RunDirectory {
    pub root: PathBuf,
}

impl RunDirectory {
    pub fn create(root: &Path) -> Result<Self> {
        for sub in ["corpus", "checkpoints", "metrics", "reports"] {
            std::fs::create_dir_all(root.join(sub))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn config_json(&self) -> PathBuf {
        self.root.join("config.json")
    }
    pub fn corpus_full(&self) -> PathBuf {
        self.root.join("corpus/corpus.jsonl")
    }
    pub fn corpus_split(&self, name: &str) -> PathBuf {
        self.root.join(format!("corpus/{name}.jsonl"))
    }
    pub fn stats_json(&self) -> PathBuf {
        self.root.join("corpus/stats.json")
    }
    pub fn lexicon_tsv(&self) -> PathBuf {
        self.root.join("lexicon.tsv")
    }
    pub fn vocab_tsv(&self) -> PathBuf {
        self.root.join("vocab.tsv")
    }
    pub fn checkpoint_best(&self) -> PathBuf {
        self.root.join("checkpoints/best.ckpt")
    }
    pub fn manifest_json(&self) -> PathBuf {
        self.root.join("metrics/manifest.json")
    }
    pub fn train_log_tsv(&self) -> PathBuf {
        self.root.join("metrics/train_log.tsv")
    }
    pub fn eval_json(&self) -> PathBuf {
        self.root.join("metrics/eval.json")
    }
    pub fn report_txt(&self) -> PathBuf {
        self.root.join("reports/report.txt")
    }
    pub fn probe_report_json(&self) -> PathBuf {
        self.root.join("reports/probe_report.json")
    }
    pub fn probe_report_txt(&self) -> PathBuf {
        self.root.join("reports/probe_report.txt")
    }
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Generate a corpus and write the JSONL, lexicon, and the stats
/// sidecar into `out_dir`.
pub fn gen_corpus_files(
    config: &GrammarConfig,
    sentence_count: usize,
    out_dir: &Path,
) -> Result<CorpusStats> {
    std::fs::create_dir_all(out_dir)?;
    let corpus = generate_corpus(config, sentence_count)?;
    let stats = corpus_stats(&corpus);
    write_corpus_jsonl(&out_dir.join("corpus.jsonl"), &corpus.sentences)?;
    corpus.lexicon.write_tsv(&out_dir.join("lexicon.tsv"))?;
    write_json_pretty(&out_dir.join("stats.json"), &stats)?;
    Ok(stats)
}

/// Test-set evaluation of one run, serialized as `metrics/eval.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub condition: String,
    pub task: String,
    pub n_test_instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<VerbMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffix: Option<SuffixMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_cases: Option<HardCaseReport>,
}

pub struct PipelineOutcome {
    pub run_dir: RunDirectory,
    pub report: EvalReport,
    pub manifest: RunManifest,
    pub checkpoint: Checkpoint,
    pub vocab: Vocab,
    pub lexicon: LemmaLexicon,
}

/// Instance sets for one task after ablations, plus the vocabulary
/// built over the (possibly ablated) training inputs.
pub enum TaskSets {
    Verb {
        train: Vec<VerbTaskInstance>,
        dev: Vec<VerbTaskInstance>,
        test: Vec<VerbTaskInstance>,
    },
    Suffix {
        train: Vec<SuffixTaskInstance>,
        dev: Vec<SuffixTaskInstance>,
        test: Vec<SuffixTaskInstance>,
    },
}

/// Build (and ablate) the instance sets for a task from split corpora.
pub fn build_task_sets(
    config: &PipelineConfig,
    train_s: &[Sentence],
    dev_s: &[Sentence],
    test_s: &[Sentence],
    lexicon: &LemmaLexicon,
) -> Result<TaskSets> {
    match config.task {
        TaskKind::VerbNumber => {
            let mut sets = [train_s, dev_s, test_s]
                .map(|s| build_verb_task(s, config.seed).instances)
                .into_iter()
                .collect::<Vec<_>>();
            for mode in &config.ablations {
                for set in sets.iter_mut() {
                    *set = apply_ablation_verb(std::mem::take(set), *mode, lexicon)?;
                }
            }
            let mut it = sets.into_iter();
            Ok(TaskSets::Verb {
                train: it.next().unwrap(),
                dev: it.next().unwrap(),
                test: it.next().unwrap(),
            })
        }
        TaskKind::SuffixRecovery => {
            let mut sets = [train_s, dev_s, test_s]
                .map(|s| build_suffix_task(s, lexicon))
                .into_iter()
                .collect::<Vec<_>>();
            for mode in &config.ablations {
                for set in sets.iter_mut() {
                    *set = apply_ablation_suffix(std::mem::take(set), *mode, lexicon)?;
                }
            }
            let mut it = sets.into_iter();
            Ok(TaskSets::Suffix {
                train: it.next().unwrap(),
                dev: it.next().unwrap(),
                test: it.next().unwrap(),
            })
        }
    }
}

impl TaskSets {
    pub fn vocab(&self) -> Vocab {
        match self {
            TaskSets::Verb { train, .. } => build_vocab_from_seqs(
                train.iter().map(|i| i.input_tokens.as_slice()),
                VOCAB_CAP,
            ),
            TaskSets::Suffix { train, .. } => build_vocab_from_seqs(
                train.iter().map(|i| i.input_tokens.as_slice()),
                VOCAB_CAP,
            ),
        }
    }
}

/// Evaluate a checkpoint on test instances, including the closest-verb
/// split when gold clauses are available (suffix task).
pub fn evaluate_sets(
    checkpoint: &Checkpoint,
    sets: &TaskSets,
    vocab: &Vocab,
    condition: &str,
) -> Result<EvalReport> {
    match sets {
        TaskSets::Verb { test, .. } => {
            let preds = crate::training::predict_verb(checkpoint, test, vocab)?;
            let golds: Vec<_> = test.iter().map(|i| i.label).collect();
            Ok(EvalReport {
                condition: condition.to_string(),
                task: TaskKind::VerbNumber.as_str().to_string(),
                n_test_instances: test.len(),
                verb: Some(verb_metrics(&preds, &golds)?),
                suffix: None,
                hard_cases: None,
            })
        }
        TaskSets::Suffix { test, .. } => {
            let preds = crate::training::predict_suffix(checkpoint, test, vocab)?;
            let mut flat_p = Vec::new();
            let mut flat_g = Vec::new();
            let mut flat_e = Vec::new();
            for (inst, p) in test.iter().zip(&preds) {
                flat_p.extend_from_slice(p);
                flat_g.extend_from_slice(&inst.labels);
                flat_e.extend_from_slice(&inst.eligible);
            }
            let metrics = suffix_metrics(&flat_p, &flat_g, &flat_e)?;
            let hard = if test.iter().all(|i| i.gold_clauses.is_some()) {
                Some(closest_verb_split(test, &preds)?)
            } else {
                None
            };
            Ok(EvalReport {
                condition: condition.to_string(),
                task: TaskKind::SuffixRecovery.as_str().to_string(),
                n_test_instances: test.len(),
                verb: None,
                suffix: Some(metrics),
                hard_cases: hard,
            })
        }
    }
}

pub fn render_eval_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "condition: {}  task: {}", report.condition, report.task);
    let _ = writeln!(out, "test instances: {}", report.n_test_instances);
    out.push('\n');
    if let Some(v) = &report.verb {
        out.push_str(&render_verb_table(&[(report.condition.clone(), v.clone())]));
    }
    if let Some(s) = &report.suffix {
        out.push_str(&render_suffix_table(&[(report.condition.clone(), s.clone())]));
        out.push('\n');
        out.push_str(&render_suffix_detail(s));
    }
    if let Some(h) = &report.hard_cases {
        out.push('\n');
        let _ = writeln!(
            out,
            "closest-verb split ({} easy / {} hard positions):",
            h.n_closest_correct, h.n_closest_incorrect
        );
        out.push_str(&render_hardcase_table(h));
    }
    out
}

/// Everything up to training: generated corpus, splits, instance sets,
/// and the vocabulary, written into the run directory.
pub struct PreparedRun {
    pub dir: RunDirectory,
    pub config: PipelineConfig,
    pub sets: TaskSets,
    pub vocab: Vocab,
    pub lexicon: LemmaLexicon,
    pub stats: CorpusStats,
}

/// Generate, split, build instances, build the vocabulary, and write
/// all of it under `out_root`. Deterministic given the config.
pub fn prepare_run(config: &PipelineConfig, out_root: &Path) -> Result<PreparedRun> {
    config.validate()?;
    let dir = RunDirectory::create(out_root)?;
    write_json_pretty(&dir.config_json(), config)?;

    let corpus: Corpus = generate_corpus(&config.seeded_grammar(), config.sentence_count)?;
    let stats = corpus_stats(&corpus);
    write_corpus_jsonl(&dir.corpus_full(), &corpus.sentences)?;
    write_json_pretty(&dir.stats_json(), &stats)?;
    corpus.lexicon.write_tsv(&dir.lexicon_tsv())?;

    let lexicon = corpus.lexicon;
    let (train_s, dev_s, test_s) = split_corpus(corpus.sentences, &config.seeded_split())?;
    write_corpus_jsonl(&dir.corpus_split("train"), &train_s)?;
    write_corpus_jsonl(&dir.corpus_split("dev"), &dev_s)?;
    write_corpus_jsonl(&dir.corpus_split("test"), &test_s)?;

    let sets = build_task_sets(config, &train_s, &dev_s, &test_s, &lexicon)?;
    let vocab = sets.vocab();
    vocab.write_tsv(&dir.vocab_tsv())?;
    Ok(PreparedRun {
        dir,
        config: config.clone(),
        sets,
        vocab,
        lexicon,
        stats,
    })
}

/// Train on a prepared run; writes the checkpoint, manifest, and the
/// metric log.
pub fn train_prepared(prepared: &PreparedRun) -> Result<(Checkpoint, RunManifest)> {
    let tc = prepared.config.train_config();
    let outcome = match &prepared.sets {
        TaskSets::Verb { train: tr, dev, .. } => {
            train(&tc, &TrainData::Verb { train: tr, dev }, &prepared.vocab)?
        }
        TaskSets::Suffix { train: tr, dev, .. } => {
            train(&tc, &TrainData::Suffix { train: tr, dev }, &prepared.vocab)?
        }
    };
    outcome.checkpoint.save(&prepared.dir.checkpoint_best())?;
    write_json_pretty(&prepared.dir.manifest_json(), &outcome.manifest)?;
    outcome
        .manifest
        .write_metrics_tsv(&prepared.dir.train_log_tsv())?;
    Ok((outcome.checkpoint, outcome.manifest))
}

/// Evaluate a checkpoint on the prepared test set; writes eval.json and
/// the text report.
pub fn evaluate_prepared(prepared: &PreparedRun, checkpoint: &Checkpoint) -> Result<EvalReport> {
    let report = evaluate_sets(
        checkpoint,
        &prepared.sets,
        &prepared.vocab,
        &prepared.config.condition(),
    )?;
    write_json_pretty(&prepared.dir.eval_json(), &report)?;
    std::fs::write(prepared.dir.report_txt(), render_eval_report(&report))?;
    Ok(report)
}

/// The full pipeline: generate, split, build, train, evaluate, report.
pub fn run_pipeline(config: &PipelineConfig, out_root: &Path) -> Result<PipelineOutcome> {
    let prepared = prepare_run(config, out_root)?;
    let (checkpoint, manifest) = train_prepared(&prepared)?;
    let report = evaluate_prepared(&prepared, &checkpoint)?;
    Ok(PipelineOutcome {
        run_dir: prepared.dir,
        report,
        manifest,
        checkpoint,
        vocab: prepared.vocab,
        lexicon: prepared.lexicon,
    })
}

// ---------------------------------------------------------------------------
// Probing command
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeCmdConfig {
    pub seeds: u32,
    pub seed: u64,
    pub max_records: usize,
    pub mlp1_hidden: usize,
}

impl Default for ProbeCmdConfig {
    fn default() -> Self {
        Self {
            seeds: 5,
            seed: 0,
            max_records: 20_000,
            mlp1_hidden: 128,
        }
    }
}

/// Output of the probing command: the closest-verb diagnostic table
/// (linear and one-hidden-layer probes) plus the grammatical
/// generalization suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCmdReport {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub closest_verb: Vec<DifferentialReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closest_verb_skipped: Option<String>,
    pub generalization: GeneralizationReport,
}

pub fn run_probe(
    checkpoint: &Checkpoint,
    sentences: &[Sentence],
    lexicon: &LemmaLexicon,
    vocab: &Vocab,
    config: &ProbeCmdConfig,
) -> Result<ProbeCmdReport> {
    let mut closest_verb = Vec::new();
    let mut closest_verb_skipped = None;
    let collected = collect_states(
        checkpoint,
        sentences,
        lexicon,
        vocab,
        StateSelector::NuclearSuffixed,
        ProbeLabelKind::ClosestVerbConnected,
    );
    match collected {
        Ok(mut records) => {
            records.truncate(config.max_records);
            for arch in [
                ProbeArch::Linear,
                ProbeArch::Mlp1 {
                    hidden: config.mlp1_hidden,
                },
            ] {
                match train_probe(&records, arch, config.seeds, config.seed) {
                    Ok(probe) => closest_verb.push(differential_report(&probe, &records)),
                    Err(Error::DegenerateProbe(msg)) => {
                        closest_verb_skipped = Some(msg);
                        break;
                    }
                    Err(other) => return Err(other),
                }
            }
        }
        Err(Error::MissingAnnotation(msg)) => closest_verb_skipped = Some(msg),
        Err(other) => return Err(other),
    }

    let generalization = generalization_suite(
        checkpoint,
        sentences,
        lexicon,
        vocab,
        &GeneralizationConfig {
            seeds: config.seeds,
            seed: config.seed,
            max_records: config.max_records,
        },
    )?;
    Ok(ProbeCmdReport {
        closest_verb,
        closest_verb_skipped,
        generalization,
    })
}

pub fn render_probe_report(report: &ProbeCmdReport) -> String {
    let fmt_cell = |s: &crate::probing::SubsetAccuracy| match s.accuracy {
        Some(a) => format!("{:.1} ({})", a * 100.0, s.n),
        None => format!("N/A ({})", s.n),
    };
    let mut out = String::new();
    out.push_str("closest-verb connectivity probes\n");
    match (&report.closest_verb_skipped, report.closest_verb.is_empty()) {
        (Some(msg), _) => {
            let _ = writeln!(out, "  skipped: {msg}");
        }
        (None, true) => out.push_str("  (no probes trained)\n"),
        _ => {
            for r in &report.closest_verb {
                let _ = writeln!(
                    out,
                    "  {:<12} total {}  wrong-subset {}  correct-subset {}  majority {}",
                    r.arch,
                    fmt_cell(&r.total),
                    fmt_cell(&r.main_wrong_subset),
                    fmt_cell(&r.main_correct_subset),
                    fmt_cell(&r.majority),
                );
            }
        }
    }
    out.push_str("\ngrammatical generalization probes (mlp2-100-50)\n");
    for e in &report.generalization.entries {
        match (&e.report, &e.skipped) {
            (Some(r), _) => {
                let _ = writeln!(
                    out,
                    "  {:<18} total {}  wrong-subset {}  correct-subset {}  majority {}",
                    e.property,
                    fmt_cell(&r.total),
                    fmt_cell(&r.main_wrong_subset),
                    fmt_cell(&r.main_correct_subset),
                    fmt_cell(&r.majority),
                );
            }
            (None, Some(msg)) => {
                let _ = writeln!(out, "  {:<18} skipped: {msg}", e.property);
            }
            (None, None) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(task: TaskKind, seed: u64) -> PipelineConfig {
        let mut config = PipelineConfig::new(task, 300, seed);
        config.grammar.noun_lexicon_size = 25;
        config.model.dims = ModelDims {
            embed: 10,
            hidden: 8,
            head_hidden: 6,
        };
        config.train.max_updates = 40;
        config.train.eval_every = 20;
        config.train.batch_size = 16;
        config
    }

    #[test]
    fn verb_pipeline_produces_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(TaskKind::VerbNumber, 5);
        let outcome = run_pipeline(&config, dir.path()).unwrap();
        assert!(outcome.report.verb.is_some());
        for path in [
            outcome.run_dir.config_json(),
            outcome.run_dir.corpus_full(),
            outcome.run_dir.stats_json(),
            outcome.run_dir.vocab_tsv(),
            outcome.run_dir.checkpoint_best(),
            outcome.run_dir.manifest_json(),
            outcome.run_dir.eval_json(),
            outcome.run_dir.report_txt(),
        ] {
            assert!(path.exists(), "{path:?} missing");
        }
    }

    #[test]
    fn suffix_pipeline_includes_hard_cases() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(TaskKind::SuffixRecovery, 6);
        let outcome = run_pipeline(&config, dir.path()).unwrap();
        assert!(outcome.report.suffix.is_some());
        assert!(outcome.report.hard_cases.is_some());
    }

    #[test]
    fn invalid_combination_rejected_before_work() {
        let mut config = tiny_config(TaskKind::VerbNumber, 7);
        config.ablations = vec![AblationMode::NoVerb];
        assert!(config.validate().is_err());
    }

    #[test]
    fn metrics_json_is_byte_identical_across_reruns() {
        let config = tiny_config(TaskKind::VerbNumber, 9);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = run_pipeline(&config, dir_a.path()).unwrap();
        let b = run_pipeline(&config, dir_b.path()).unwrap();
        let bytes_a = std::fs::read(a.run_dir.eval_json()).unwrap();
        let bytes_b = std::fs::read(b.run_dir.eval_json()).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }
}
