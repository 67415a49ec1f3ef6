//! Preference-data construction: find segments a model reproduces verbatim,
//! paraphrase them, and turn the results into preference pairs.

mod detect;
pub mod jsonl;
mod pairs;
mod paraphrase;

pub use detect::{detect_memorized, DetectConfig, Detection, DocFailure, MemorizedSegment, SegmentRecord};
pub use pairs::{
    build_pairs, compose_mixture, generic_pairs, MixtureSpec, PairMode, PairSource, PreferencePair, COPY_NO, COPY_YES,
};
pub use paraphrase::{
    paraphrase, paraphrase_all, render_paraphrase_prompt, Paraphrase, StubParaphraser, PARAPHRASE_PROMPT,
};

use thiserror::Error;

use crate::lm::LmError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("{failed} of {attempted} documents failed; aborting (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        attempted: usize,
        first: String,
        remote: bool,
    },
    #[error("{segments} segments but {paraphrases} paraphrases")]
    LengthMismatch { segments: usize, paraphrases: usize },
    #[error("mixture needs {required} generic pairs but only {available} were supplied")]
    InsufficientGeneric { required: usize, available: usize },
    #[error("paraphrase fraction {0} must lie in [0, 1]")]
    InvalidFraction(f64),
    #[error("cannot paraphrase an empty segment")]
    EmptySegment,
    #[error("paraphrase reply was empty")]
    EmptyReply,
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// True when the failure originates at a remote endpoint.
    pub fn is_remote(&self) -> bool {
        match self {
            PipelineError::Lm(e) => e.is_remote(),
            PipelineError::TooManyFailures { remote, .. } => *remote,
            _ => false,
        }
    }
}
