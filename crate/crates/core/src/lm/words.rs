use super::{GenerationConfig, LanguageModel, LmError};
use crate::metrics::WordTokenizer;
use crate::vocab::Vocab;

/// Word-in, word-out continuation; the unit the evaluation harness works in.
pub trait WordGenerator: Send + Sync {
    /// Continues `prompt` (already split into words) by at most
    /// `cfg.max_tokens` words, optionally under a system prompt.
    fn continue_words(
        &self,
        system_prompt: Option<&str>,
        prompt: &[String],
        cfg: &GenerationConfig,
    ) -> Result<Vec<String>, LmError>;
}

/// Adapts a token-level model to words through a one-to-one word vocabulary.
pub struct VocabModel<'a, M: LanguageModel + ?Sized> {
    pub model: &'a M,
    pub vocab: &'a Vocab,
    pub tokenizer: WordTokenizer,
}

impl<'a, M: LanguageModel + ?Sized> VocabModel<'a, M> {
    pub fn new(model: &'a M, vocab: &'a Vocab) -> Self {
        Self {
            model,
            vocab,
            tokenizer: WordTokenizer::default(),
        }
    }
}

impl<M: LanguageModel + ?Sized> WordGenerator for VocabModel<'_, M> {
    fn continue_words(
        &self,
        system_prompt: Option<&str>,
        prompt: &[String],
        cfg: &GenerationConfig,
    ) -> Result<Vec<String>, LmError> {
        let body = self.vocab.encode_words(prompt);
        let context = match system_prompt {
            Some(sys) => self.vocab.encode_system_prompt(&self.tokenizer, sys).concat(&body)?,
            None => body,
        };
        let out = super::generate(self.model, &context, cfg)?;
        Ok(self.vocab.decode_words(out.tokens()))
    }
}
