//! Tools for measuring and reducing verbatim regurgitation in language models.
//!
//! The crate covers the whole loop: a suffix-array index over a reference
//! corpus with n-gram statistics, overlap metrics (ROUGE-L, extraction ratio,
//! Creativity Index), a language-model abstraction with a small trainable
//! tabular model and an HTTP client, detection of memorized segments and
//! construction of paraphrase preference pairs, preference optimization, and
//! the evaluation harness that reports on all of it.

mod codec;
pub mod dpo;
pub mod eval;
pub mod index;
pub mod lm;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod toy;
pub mod vocab;

pub use vocab::{TokenSeq, Vocab, VocabError, VocabId};
