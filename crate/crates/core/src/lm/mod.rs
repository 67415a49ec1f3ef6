//! Language-model abstraction: exact sequence log-probabilities and
//! generation, implemented by the in-repo [`TabularLm`] and by
//! [`RemoteModel`] over an HTTP completions endpoint.

mod checkpoint;
mod remote;
pub mod sampling;
mod tabular;
mod words;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC};
pub use remote::{ClientConfig, CompletionsClient, RemoteModel, API_KEY_ENV};
pub use tabular::{LogitGrad, MleConfig, RowKey, TabularLm};
pub use words::{VocabModel, WordGenerator};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{TokenSeq, VocabError, VocabId};

#[derive(Debug, Error)]
pub enum LmError {
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("target sequence is empty")]
    EmptyTarget,
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("endpoint returned HTTP {status} after {attempts} attempt(s): {body}")]
    Http {
        status: u16,
        body: String,
        attempts: u32,
        retryable: bool,
    },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("endpoint lacks a required capability: {0}")]
    Capability(String),
    #[error("malformed endpoint response: {0}")]
    Decode(String),
}

impl LmError {
    /// True for failures that originate at a remote endpoint.
    pub fn is_remote(&self) -> bool {
        matches!(
            self,
            LmError::Http { .. } | LmError::Transport { .. } | LmError::Capability(_) | LmError::Decode(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub max_tokens: usize,
    /// 0 selects greedy decoding.
    pub temperature: f64,
    pub top_p: f64,
    pub seed: u64,
}

impl GenerationConfig {
    pub fn greedy(max_tokens: usize) -> Self {
        Self {
            max_tokens,
            temperature: 0.0,
            top_p: 1.0,
            seed: 0,
        }
    }

    /// Settings used for open-ended creative generation.
    pub fn creative(max_tokens: usize, seed: u64) -> Self {
        Self {
            max_tokens,
            temperature: 0.7,
            top_p: 0.9,
            seed,
        }
    }

    /// Settings used when asking a remote model for paraphrases.
    pub fn paraphrasing(max_tokens: usize, seed: u64) -> Self {
        Self {
            max_tokens,
            temperature: 0.6,
            top_p: 0.9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), LmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LmError::InvalidConfig(format!("temperature {} must be >= 0", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LmError::InvalidConfig(format!("top_p {} must be in (0, 1]", self.top_p)));
        }
        Ok(())
    }
}

/// Token-level model interface.
pub trait LanguageModel: Send + Sync {
    fn vocab_id(&self) -> &VocabId;

    /// Log-probability of each token of `target` given `context` and the
    /// target tokens before it. Remote models may report their own token
    /// granularity, so only the sum is comparable across implementations.
    fn score(&self, context: &TokenSeq, target: &TokenSeq) -> Result<Vec<f64>, LmError>;

    fn generate(&self, context: &TokenSeq, cfg: &GenerationConfig) -> Result<TokenSeq, LmError>;
}

/// Plain text-in, text-out completion, used for paraphrasing.
pub trait TextGenerator: Send + Sync {
    fn complete(&self, prompt: &str, cfg: &GenerationConfig) -> Result<String, LmError>;
}

pub fn seq_logprob<M: LanguageModel + ?Sized>(model: &M, context: &TokenSeq, target: &TokenSeq) -> Result<f64, LmError> {
    if target.is_empty() {
        return Err(LmError::EmptyTarget);
    }
    Ok(model.score(context, target)?.iter().sum())
}

pub fn generate<M: LanguageModel + ?Sized>(model: &M, context: &TokenSeq, cfg: &GenerationConfig) -> Result<TokenSeq, LmError> {
    cfg.validate()?;
    model.generate(context, cfg)
}
