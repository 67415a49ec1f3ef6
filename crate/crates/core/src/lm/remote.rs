//! Blocking client for a generic JSON completions endpoint.
//!
//! Requests go to `POST {base}/v1/completions` with body
//! `{model, prompt, max_tokens, temperature, top_p, logprobs, echo}`.
//! Scoring sends the text with `echo: true, max_tokens: 0` and reads
//! `choices[0].logprobs.token_logprobs`, using `text_offset` (character
//! offsets) to find where the target starts.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::tabular::TabularLm;
use super::{GenerationConfig, LanguageModel, LmError, TextGenerator, WordGenerator};
use crate::metrics::WordTokenizer;
use crate::vocab::{TokenSeq, Vocab, VocabId};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "COPYGUARD_API_KEY";

const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl ClientConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }

    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: usize,
    temperature: f64,
    top_p: f64,
    logprobs: u32,
    echo: bool,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    text: String,
    #[serde(default)]
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Logprobs {
    #[serde(default)]
    token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    text_offset: Option<Vec<usize>>,
}

/// Counting gate bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(slots: usize) -> Self {
        Self {
            free: Mutex::new(slots.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct CompletionsClient {
    cfg: ClientConfig,
    http: reqwest::blocking::Client,
    gate: Gate,
}

impl CompletionsClient {
    pub fn new(cfg: ClientConfig) -> Result<Self, LmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| LmError::Transport {
                message: e.to_string(),
                attempts: 0,
            })?;
        let gate = Gate::new(cfg.max_in_flight);
        Ok(Self { cfg, http, gate })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn endpoint(&self) -> String {
        format!("{}/v1/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn post(&self, req: &CompletionRequest<'_>) -> Result<CompletionResponse, LmError> {
        let _permit = self.gate.acquire();
        let url = self.endpoint();
        let max_attempts = self.cfg.max_retries + 1;
        let mut attempt = 0;
        loop {
            attempt += 1;
            let mut rb = self.http.post(&url).json(req);
            if let Some(key) = &self.cfg.api_key {
                rb = rb.bearer_auth(key);
            }
            let mut delay = self.cfg.backoff * 2u32.saturating_pow(attempt - 1);
            let failure = match rb.send() {
                Err(e) => LmError::Transport {
                    message: e.to_string(),
                    attempts: attempt,
                },
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let body = resp.text().map_err(|e| LmError::Transport {
                            message: e.to_string(),
                            attempts: attempt,
                        })?;
                        return serde_json::from_str(&body).map_err(|e| LmError::Decode(e.to_string()));
                    }
                    let retryable = status.as_u16() == 429 || status.is_server_error();
                    if let Some(secs) = resp
                        .headers()
                        .get(reqwest::header::RETRY_AFTER)
                        .and_then(|v| v.to_str().ok())
                        .and_then(|v| v.trim().parse::<u64>().ok())
                    {
                        delay = Duration::from_secs(secs);
                    }
                    let body: String = resp.text().unwrap_or_default().chars().take(BODY_EXCERPT).collect();
                    let err = LmError::Http {
                        status: status.as_u16(),
                        body,
                        attempts: attempt,
                        retryable,
                    };
                    if !retryable {
                        return Err(err);
                    }
                    err
                }
            };
            if attempt >= max_attempts {
                return Err(failure);
            }
            log::warn!("completions request failed ({failure}); retrying in {delay:?}");
            thread::sleep(delay);
        }
    }

    /// Log-probabilities of the tokens of `target` when it follows `context`
    /// verbatim (the caller supplies any separating whitespace).
    pub fn score_text(&self, context: &str, target: &str) -> Result<Vec<f64>, LmError> {
        let prompt = format!("{context}{target}");
        let full = self.echo_logprobs(&prompt)?;
        let start = match full.text_offset {
            Some(offsets) => {
                if offsets.len() != full.token_logprobs.len() {
                    return Err(LmError::Decode("text_offset and token_logprobs lengths differ".into()));
                }
                let boundary = context.chars().count();
                offsets.iter().position(|&o| o >= boundary).unwrap_or(offsets.len())
            }
            None if context.is_empty() => 0,
            None => self.echo_logprobs(context)?.token_logprobs.len(),
        };
        full.token_logprobs[start.min(full.token_logprobs.len())..]
            .iter()
            .map(|lp| lp.ok_or_else(|| LmError::Capability("missing log-probability for a target token".into())))
            .collect()
    }

    fn echo_logprobs(&self, prompt: &str) -> Result<Logprobs, LmError> {
        let req = CompletionRequest {
            model: &self.cfg.model,
            prompt,
            max_tokens: 0,
            temperature: 0.0,
            top_p: 1.0,
            logprobs: 1,
            echo: true,
        };
        let resp = self.post(&req)?;
        let choice = resp
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| LmError::Decode("response has no choices".into()))?;
        match choice.logprobs {
            Some(lp) if !lp.token_logprobs.is_empty() => Ok(lp),
            _ => Err(LmError::Capability(
                "endpoint did not return echoed token_logprobs".into(),
            )),
        }
    }
}

impl TextGenerator for CompletionsClient {
    fn complete(&self, prompt: &str, cfg: &GenerationConfig) -> Result<String, LmError> {
        cfg.validate()?;
        let req = CompletionRequest {
            model: &self.cfg.model,
            prompt,
            max_tokens: cfg.max_tokens,
            temperature: cfg.temperature,
            top_p: cfg.top_p,
            logprobs: 0,
            echo: false,
        };
        let resp = self.post(&req)?;
        resp.choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .ok_or_else(|| LmError::Decode("response has no choices".into()))
    }
}

/// A remote model viewed through a word vocabulary, so it can stand in
/// wherever a token-level [`LanguageModel`] is expected.
pub struct RemoteModel {
    client: CompletionsClient,
    vocab: Vocab,
    vocab_id: VocabId,
    tokenizer: WordTokenizer,
}

impl RemoteModel {
    pub fn new(client: CompletionsClient, vocab: Vocab) -> Self {
        let vocab_id = vocab.id();
        Self {
            client,
            vocab,
            vocab_id,
            tokenizer: WordTokenizer::default(),
        }
    }

    pub fn client(&self) -> &CompletionsClient {
        &self.client
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn prompt_text(&self, system_prompt: Option<&str>, body: &str) -> String {
        match system_prompt {
            Some(sys) => format!("{sys}\n\n{body}"),
            None => body.to_string(),
        }
    }

    fn context_text(&self, context: &[u32]) -> String {
        let (cond, rest) = TabularLm::split_context(context);
        let sys = cond.map(|c| self.vocab.decode(&c));
        self.prompt_text(sys.as_deref(), &self.vocab.decode(rest))
    }
}

impl LanguageModel for RemoteModel {
    fn vocab_id(&self) -> &VocabId {
        &self.vocab_id
    }

    fn score(&self, context: &TokenSeq, target: &TokenSeq) -> Result<Vec<f64>, LmError> {
        self.vocab_id.ensure_same(context.vocab_id())?;
        self.vocab_id.ensure_same(target.vocab_id())?;
        let mut ctx = self.context_text(context.tokens());
        if !ctx.is_empty() && !ctx.ends_with('\n') {
            ctx.push(' ');
        }
        self.client.score_text(&ctx, &self.vocab.decode(target.tokens()))
    }

    fn generate(&self, context: &TokenSeq, cfg: &GenerationConfig) -> Result<TokenSeq, LmError> {
        self.vocab_id.ensure_same(context.vocab_id())?;
        let text = self.client.complete(&self.context_text(context.tokens()), cfg)?;
        let words = self.tokenizer.tokenize(&text).truncated(cfg.max_tokens);
        Ok(self.vocab.encode_words(words.words()))
    }
}

impl WordGenerator for RemoteModel {
    fn continue_words(
        &self,
        system_prompt: Option<&str>,
        prompt: &[String],
        cfg: &GenerationConfig,
    ) -> Result<Vec<String>, LmError> {
        let text = self
            .client
            .complete(&self.prompt_text(system_prompt, &prompt.join(" ")), cfg)?;
        Ok(self.tokenizer.tokenize(&text).truncated(cfg.max_tokens).into_words())
    }
}
