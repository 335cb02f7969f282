//! Text simplification by iterative token-level edit tagging.
//!
//! A sentence is rewritten by predicting one edit tag per word (`$KEEP`,
//! `$DELETE`, `$APPEND_w`, `$REPLACE_w` or a grammatical `$TRANSFORM_*`),
//! applying the tags, and repeating on the edited sentence for a small
//! number of iterations. The crate covers the whole loop:
//!
//! * [`token`], [`tag`], [`vocab`]: word-level sentences, edit tags and the
//!   frequency-ranked tag vocabulary.
//! * [`align`], [`extract`], [`preprocess`], [`corpus`]: deriving gold tag
//!   sequences from parallel `source<TAB>target` corpora.
//! * [`apply`], [`transform`]: the tag interpreter.
//! * [`tagger`]: prediction backends (gold oracle, a hashed-feature
//!   statistical tagger, an external process speaking NDJSON) and the
//!   ensemble combiner.
//! * [`engine`]: confidence biases, detection gating and the iterative
//!   decode loop.
//! * [`metrics`], [`tune`], [`bench`]: SARI/FKGL evaluation, inference
//!   hyper-parameter search and the batched latency harness.

pub mod align;
pub mod apply;
pub mod bench;
pub mod corpus;
pub mod engine;
mod error;
pub mod extract;
pub mod hash;
pub mod metrics;
pub mod preprocess;
pub mod tag;
pub mod tagger;
pub mod token;
pub mod transform;
pub mod tune;
pub mod vocab;

pub use apply::{apply_tags, apply_tags_with};
pub use engine::{decode_step, simplify, simplify_batch, Engine, InferenceConfig, SimplifyTrace, TraceStep};
pub use error::{Error, Result};
pub use extract::{build_vocab, extract_tags, extract_tags_with, tag_chain, TagSeq};
pub use tag::{EditTag, TransformKind};
pub use tagger::{TagPrediction, TaggerBackend};
pub use token::{detokenize, tokenize, Token, TokenSeq};
pub use transform::Lexicon;
pub use vocab::TagVocabulary;
