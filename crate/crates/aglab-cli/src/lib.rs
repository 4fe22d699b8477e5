//! Command implementations behind the `aglab` binary.
//!
//! Exit-code contract: 0 success, 1 runtime failure, 2 usage or config
//! error. The output root resolves as `--out`, then `AGLAB_RUN_DIR`,
//! then `./runs`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use aglab_core::datasets::{
    apply_ablation_suffix, apply_ablation_verb, build_suffix_task, build_verb_task, build_vocab,
    read_annotated, read_corpus_jsonl, write_jsonl, AblationMode, Vocab,
};
use aglab_core::grammar::GrammarConfig;
use aglab_core::morphology::LemmaLexicon;
use aglab_core::neural::Checkpoint;
use aglab_core::pipeline::{
    evaluate_prepared, gen_corpus_files, prepare_run, render_eval_report, render_probe_report,
    run_pipeline, run_probe, EvalReport, PipelineConfig, ProbeCmdConfig, RunDirectory,
    train_prepared,
};
use aglab_core::Error as CoreError;

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

pub fn runtime_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

/// Config-shaped core errors exit 2, everything else exits 1.
pub fn from_core(e: CoreError) -> CliError {
    match &e {
        CoreError::Config(_) => usage_error(e.to_string()),
        _ => runtime_error(e.to_string()),
    }
}

/// Resolve the output root: explicit flag, then AGLAB_RUN_DIR, then
/// ./runs.
pub fn output_root(out: Option<&Path>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Ok(dir) = std::env::var("AGLAB_RUN_DIR") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("runs")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenCorpusConfig {
    pub sentence_count: usize,
    #[serde(default)]
    pub grammar: GrammarConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_error(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage_error(format!("invalid config {}: {e}", path.display())))
}

pub fn cmd_gen_corpus(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let mut config: GenCorpusConfig = read_json_config(config_path)?;
    if let Some(s) = seed.or(config.seed) {
        config.grammar.seed = s;
    }
    config.grammar.validate().map_err(from_core)?;
    if config.sentence_count == 0 {
        return Err(usage_error("sentence_count must be positive"));
    }
    let out_dir = output_root(out);
    let stats = gen_corpus_files(&config.grammar, config.sentence_count, &out_dir)
        .map_err(from_core)?;
    println!(
        "wrote {} sentences to {} (dative rate {:.4}, omission rate {:.4}, -ak density {:.4})",
        stats.n_sentences,
        out_dir.display(),
        stats.dative_sentence_rate,
        stats.ergative_omission_rate,
        stats.ak_token_density
    );
    Ok(())
}

pub fn cmd_build_vocab(corpus: &Path, out: &Path) -> CliResult<()> {
    let sentences = read_corpus_jsonl(corpus).map_err(from_core)?;
    let vocab = build_vocab(&sentences);
    vocab.write_tsv(out).map_err(from_core)?;
    println!(
        "vocab written to {} ({} tokens, {} lemmas, {} ngrams)",
        out.display(),
        vocab.tokens.len(),
        vocab.lemmas.len(),
        vocab.ngrams.len()
    );
    Ok(())
}

fn parse_ablations(spec: &str) -> CliResult<Vec<AblationMode>> {
    spec.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<AblationMode>().map_err(from_core))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_build_task(
    task: &str,
    corpus: &Path,
    lexicon_path: &Path,
    out: &Path,
    seed: u64,
    ablations: Option<&str>,
) -> CliResult<()> {
    let sentences = read_corpus_jsonl(corpus).map_err(from_core)?;
    let lexicon = LemmaLexicon::read_tsv(lexicon_path).map_err(from_core)?;
    let modes = ablations.map(parse_ablations).transpose()?.unwrap_or_default();
    match task {
        "verb" => {
            let build = build_verb_task(&sentences, seed);
            let mut instances = build.instances;
            for mode in modes {
                instances = apply_ablation_verb(instances, mode, &lexicon).map_err(from_core)?;
            }
            write_jsonl(out, &instances).map_err(from_core)?;
            println!(
                "wrote {} verb-task instances ({} sentences skipped) to {}",
                instances.len(),
                build.skipped,
                out.display()
            );
        }
        "suffix" => {
            let mut instances = build_suffix_task(&sentences, &lexicon);
            for mode in modes {
                instances = apply_ablation_suffix(instances, mode, &lexicon).map_err(from_core)?;
            }
            write_jsonl(out, &instances).map_err(from_core)?;
            println!(
                "wrote {} suffix-task instances to {}",
                instances.len(),
                out.display()
            );
        }
        other => return Err(usage_error(format!("unknown task {other:?}"))),
    }
    Ok(())
}

fn load_pipeline_config(path: &Path, seed: Option<u64>) -> CliResult<PipelineConfig> {
    let mut config: PipelineConfig = read_json_config(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().map_err(from_core)?;
    Ok(config)
}

fn default_run_dir(config: &PipelineConfig, out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => output_root(None).join(format!(
            "{}-{}-seed{}",
            config.task.as_str(),
            config.condition(),
            config.seed
        )),
    }
}

pub fn cmd_train(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let config = load_pipeline_config(config_path, seed)?;
    let run_dir = default_run_dir(&config, out);
    let prepared = prepare_run(&config, &run_dir).map_err(from_core)?;
    let (_, manifest) = train_prepared(&prepared).map_err(from_core)?;
    println!(
        "trained {} updates; best dev metric {:.4} at step {}; run dir {}",
        manifest.updates_run,
        manifest.best_metric,
        manifest.best_step,
        run_dir.display()
    );
    Ok(())
}

pub fn cmd_evaluate(run: &Path, checkpoint: Option<&Path>) -> CliResult<()> {
    let dir = RunDirectory::create(run).map_err(from_core)?;
    let config = PipelineConfig::from_json_file(&dir.config_json()).map_err(from_core)?;
    let prepared = prepare_run(&config, run).map_err(from_core)?;
    let ckpt_path = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.checkpoint_best());
    let ckpt = Checkpoint::load(&ckpt_path).map_err(from_core)?;
    let report = evaluate_prepared(&prepared, &ckpt).map_err(from_core)?;
    print!("{}", render_eval_report(&report));
    Ok(())
}

pub fn cmd_pipeline(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let config = load_pipeline_config(config_path, seed)?;
    let run_dir = default_run_dir(&config, out);
    let outcome = run_pipeline(&config, &run_dir).map_err(from_core)?;
    print!("{}", render_eval_report(&outcome.report));
    println!("run dir: {}", run_dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_probe(
    run: &Path,
    annotated: Option<&Path>,
    corpus: Option<&Path>,
    seeds: u32,
    seed: u64,
    max_records: usize,
) -> CliResult<()> {
    let dir = RunDirectory::create(run).map_err(from_core)?;
    let ckpt = Checkpoint::load(&dir.checkpoint_best()).map_err(from_core)?;
    let vocab = Vocab::read_tsv(&dir.vocab_tsv()).map_err(from_core)?;
    let lexicon = LemmaLexicon::read_tsv(&dir.lexicon_tsv()).map_err(from_core)?;
    let sentences = if let Some(path) = annotated {
        read_annotated(path).map_err(from_core)?
    } else {
        let path = corpus
            .map(Path::to_path_buf)
            .unwrap_or_else(|| dir.corpus_split("test"));
        read_corpus_jsonl(&path).map_err(from_core)?
    };
    let config = ProbeCmdConfig {
        seeds,
        seed,
        max_records,
        ..ProbeCmdConfig::default()
    };
    let report = run_probe(&ckpt, &sentences, &lexicon, &vocab, &config).map_err(from_core)?;
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| runtime_error(e.to_string()))?;
    json.push('\n');
    std::fs::write(dir.probe_report_json(), json)
        .map_err(|e| runtime_error(e.to_string()))?;
    let text = render_probe_report(&report);
    std::fs::write(dir.probe_report_txt(), &text)
        .map_err(|e| runtime_error(e.to_string()))?;
    print!("{text}");
    Ok(())
}

pub fn cmd_report(run: &Path) -> CliResult<()> {
    let dir = RunDirectory::create(run).map_err(from_core)?;
    let text = std::fs::read_to_string(dir.eval_json())
        .map_err(|e| runtime_error(format!("no eval.json in {}: {e}", run.display())))?;
    let report: EvalReport =
        serde_json::from_str(&text).map_err(|e| runtime_error(e.to_string()))?;
    let rendered = render_eval_report(&report);
    std::fs::write(dir.report_txt(), &rendered).map_err(|e| runtime_error(e.to_string()))?;
    print!("{rendered}");
    Ok(())
}
