use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aglab_cli::{
    cmd_build_task, cmd_build_vocab, cmd_evaluate, cmd_gen_corpus, cmd_pipeline, cmd_probe,
    cmd_report, cmd_train,
};

/// Agreement-prediction laboratory: synthetic ergative-absolutive
/// corpora, verb-number and suffix-recovery tasks, and diagnostic
/// probes over a from-scratch bidirectional recurrent model.
#[derive(Parser)]
#[command(name = "aglab", version, about)]
struct Cli {
    /// Worker threads for data-parallel stages (output is identical at
    /// any worker count).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (JSONL + lexicon + stats sidecar).
    GenCorpus {
        /// Declarative grammar config (JSON: sentence_count, grammar, seed).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $AGLAB_RUN_DIR or ./runs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build token/lemma/ngram vocabulary tables from a corpus.
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build task instances (verb or suffix) from a corpus.
    BuildTask {
        /// Task: verb | suffix.
        #[arg(long)]
        task: String,
        #[arg(long)]
        corpus: PathBuf,
        /// Lemma lexicon TSV (surface stem, lemma).
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated ablations, applied in order
        /// (suffixes-only, no-suffixes, neutralized-case, single-verb,
        /// no-ak, no-verb).
        #[arg(long)]
        ablation: Option<String>,
    },
    /// Prepare a run directory and train (no test evaluation).
    Train {
        /// Pipeline config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a run's test split.
    Evaluate {
        /// Run directory (holds config.json and checkpoints/).
        #[arg(long)]
        run: PathBuf,
        /// Checkpoint path (default: the run's best checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train diagnostic probes on a run's checkpoint.
    Probe {
        #[arg(long)]
        run: PathBuf,
        /// Annotated corpus (CoNLL-like TSV) instead of the test split.
        #[arg(long)]
        annotated: Option<PathBuf>,
        /// Corpus JSONL to probe on (default: the run's test split).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Probe initializations per property.
        #[arg(long, default_value_t = 5)]
        seeds: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on probing records per property.
        #[arg(long, default_value_t = 20_000)]
        max_records: usize,
    },
    /// Re-render the text report from a run's eval.json.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
    /// Full run: generate, split, build, train, evaluate, report.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    aglab_core::par::configure_workers(cli.workers);
    let result = match cli.command {
        Command::GenCorpus { config, out, seed } => {
            cmd_gen_corpus(&config, out.as_deref(), seed)
        }
        Command::BuildVocab { corpus, out } => cmd_build_vocab(&corpus, &out),
        Command::BuildTask {
            task,
            corpus,
            lexicon,
            out,
            seed,
            ablation,
        } => cmd_build_task(&task, &corpus, &lexicon, &out, seed, ablation.as_deref()),
        Command::Train { config, out, seed } => cmd_train(&config, out.as_deref(), seed),
        Command::Evaluate { run, checkpoint } => cmd_evaluate(&run, checkpoint.as_deref()),
        Command::Probe {
            run,
            annotated,
            corpus,
            seeds,
            seed,
            max_records,
        } => cmd_probe(
            &run,
            annotated.as_deref(),
            corpus.as_deref(),
            seeds,
            seed,
            max_records,
        ),
        Command::Report { run } => cmd_report(&run),
        Command::Pipeline { config, out, seed } => cmd_pipeline(&config, out.as_deref(), seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code.clamp(0, 255) as u8)
        }
    }
}
