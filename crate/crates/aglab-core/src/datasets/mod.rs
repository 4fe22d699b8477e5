//! Task datasets: sequence types, vocabularies, splits, instance
//! builders, ablation transforms, and all file formats.

mod io;
mod split;
mod tasks;
mod types;
mod vocab;

pub use io::{
    read_annotated, read_corpus_jsonl, read_jsonl, write_annotated, write_corpus_jsonl,
    write_jsonl,
};
pub use split::{split_corpus, SplitSpec};
pub use tasks::{
    apply_ablation_suffix, apply_ablation_verb, build_suffix_task, build_verb_task, AblationMode,
    SuffixTaskInstance, VerbTaskBuild, VerbTaskInstance,
};
pub use types::{
    is_reserved_symbol, suffix_symbol, Sentence, Token, AMB_MARK_SYMBOL, NO_SUFFIX_SYMBOL,
    PL_MARK_SYMBOL, RESERVED_SYMBOLS, SG_MARK_SYMBOL, UNK_SYMBOL, VERB_MASK_SYMBOL,
};
pub use vocab::{
    build_vocab, build_vocab_from_seqs, build_vocab_with_cap, extract_ngrams, Vocab, VocabTable,
    VOCAB_CAP,
};
