//! # aglab-core
//!
//! A laboratory for studying whether sequential neural models acquire
//! hierarchical agreement structure, built around an ergative-absolutive
//! synthetic grammar with exact gold structure.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`grammar`] generates synthetic corpora with exact gold clause
//!   structure and provides deterministic task oracles.
//! - [`morphology`] implements the nuclear-case suffix system:
//!   segmentation, attachment, and number-neutralized rewriting.
//! - [`datasets`] builds the two task datasets (verb-argument number
//!   prediction and suffix recovery), applies ablation transforms, and
//!   owns vocabularies, splits, and file formats.
//! - [`neural`] is a from-scratch differentiable core: composite
//!   embeddings, a bidirectional gated recurrent encoder, task heads,
//!   reverse-mode gradients, and Adam.
//! - [`training`] runs end-to-end training with dev-based early stopping.
//! - [`evaluation`] computes per-role accuracy/recall, per-suffix
//!   precision/recall/F1, and the closest-verb easy/hard split.
//! - [`probing`] trains diagnostic classifiers on frozen hidden states.
//! - [`pipeline`] binds everything into reproducible run directories.
//!
//! All randomness flows from a single seed through named sub-streams
//! (see [`rng`]); every data-parallel stage reduces in a fixed order so
//! results are bit-identical regardless of worker count.

pub mod datasets;
pub mod evaluation;
pub mod grammar;
pub mod morphology;
pub mod neural;
pub mod par;
pub mod pipeline;
pub mod probing;
pub mod rng;
pub mod training;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown auxiliary surface {0:?}")]
    UnknownAux(String),
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("non-finite {what} ({context})")]
    NonFinite { what: String, context: String },
    #[error("degenerate probe data: {0}")]
    DegenerateProbe(String),
    #[error("missing annotation: {0}")]
    MissingAnnotation(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
