//! Model loading: a local tabular checkpoint or a remote endpoint.

use std::path::Path;
use std::time::Duration;

use copyguard::lm::{
    read_checkpoint, ClientConfig, CompletionsClient, GenerationConfig, LanguageModel, LmError, RemoteModel,
    TabularLm, VocabModel, WordGenerator,
};
use copyguard::Vocab;

use crate::args::{ModelArgs, RemoteArgs};
use crate::failure::{Context, Failure};

pub enum LoadedModel {
    Local { model: TabularLm, vocab: Vocab },
    Remote(RemoteModel),
}

pub fn load_checkpoint(path: &Path) -> Result<(TabularLm, Vocab), Failure> {
    let ckpt = read_checkpoint(path).ctx(format!("reading checkpoint {}", path.display()))?;
    let vocab = ckpt
        .vocab
        .ok_or_else(|| Failure::data(format!("checkpoint {} carries no word table", path.display())))?;
    Ok((ckpt.model, vocab))
}

pub fn client(remote: &RemoteArgs) -> Result<CompletionsClient, Failure> {
    let endpoint = remote
        .endpoint
        .as_deref()
        .ok_or_else(|| Failure::usage("--endpoint is required"))?;
    let mut cfg = ClientConfig::new(endpoint, remote.remote_model.clone()).with_env_key();
    cfg.max_in_flight = remote.max_in_flight.max(1);
    cfg.max_retries = remote.retries;
    cfg.timeout = Duration::from_secs(remote.timeout_secs);
    Ok(CompletionsClient::new(cfg)?)
}

impl LoadedModel {
    /// A remote model has no vocabulary of its own; `vocab` supplies the one
    /// its outputs are mapped into.
    pub fn load(args: &ModelArgs, vocab: impl FnOnce() -> Vocab) -> Result<Self, Failure> {
        match &args.model {
            Some(path) => {
                let (model, vocab) = load_checkpoint(path)?;
                Ok(Self::Local { model, vocab })
            }
            None => Ok(Self::Remote(RemoteModel::new(client(&args.remote)?, vocab()))),
        }
    }

    pub fn vocab(&self) -> &Vocab {
        match self {
            Self::Local { vocab, .. } => vocab,
            Self::Remote(r) => r.vocab(),
        }
    }

    pub fn lm(&self) -> &dyn LanguageModel {
        match self {
            Self::Local { model, .. } => model,
            Self::Remote(r) => r,
        }
    }
}

impl WordGenerator for LoadedModel {
    fn continue_words(
        &self,
        system_prompt: Option<&str>,
        prompt: &[String],
        cfg: &GenerationConfig,
    ) -> Result<Vec<String>, LmError> {
        match self {
            Self::Local { model, vocab } => VocabModel::new(model, vocab).continue_words(system_prompt, prompt, cfg),
            Self::Remote(r) => r.continue_words(system_prompt, prompt, cfg),
        }
    }
}
