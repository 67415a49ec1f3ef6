//! Order-k tabular language model.
//!
//! Each context (the previous `order` tokens, left-padded with [`BOS`]) owns
//! a row of `V` logits; the next-token distribution is the softmax of that
//! row. Rows that were never written are generated on demand from the model
//! seed, so an untouched model is fully determined by `(seed, init_scale)`.
//!
//! A context may start with a system prompt block `<sys> … </sys>`. The
//! block is not part of the n-gram window; instead it selects an overlay
//! table keyed by the prompt tokens. An overlay row that has not been
//! written reads through to the unconditioned row, and is copied from it the
//! first time it is updated. Gradients are taken with respect to the row
//! actually used for each position.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sampling::{sample_next, softmax};
use super::{GenerationConfig, LanguageModel, LmError};
use crate::vocab::{TokenSeq, VocabError, VocabId, BOS, SYS_CLOSE, SYS_OPEN};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    /// System-prompt tokens selecting an overlay table, if any.
    pub condition: Option<Vec<u32>>,
    /// Exactly `order` tokens.
    pub context: Vec<u32>,
}

impl RowKey {
    fn base(&self) -> RowKey {
        RowKey {
            condition: None,
            context: self.context.clone(),
        }
    }
}

/// Sparse gradient (or any per-row update) over a model's logit table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogitGrad {
    rows: BTreeMap<RowKey, Vec<f64>>,
}

impl LogitGrad {
    pub fn get(&self, key: &RowKey) -> Option<&[f64]> {
        self.rows.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RowKey, &[f64])> {
        self.rows.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `self += scale * other`, in key order.
    pub fn add_scaled(&mut self, other: &LogitGrad, scale: f64) {
        for (key, row) in &other.rows {
            let dst = self
                .rows
                .entry(key.clone())
                .or_insert_with(|| vec![0.0; row.len()]);
            for (d, s) in dst.iter_mut().zip(row) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.rows.values_mut() {
            for v in row {
                *v *= factor;
            }
        }
    }

    fn row_mut(&mut self, key: RowKey, width: usize) -> &mut Vec<f64> {
        self.rows.entry(key).or_insert_with(|| vec![0.0; width])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularLm {
    order: usize,
    vocab: VocabId,
    seed: u64,
    init_scale: f64,
    rows: BTreeMap<RowKey, Vec<f64>>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl TabularLm {
    /// `init_scale` is the standard deviation of the initial logits; zero
    /// gives the uniform model.
    pub fn new(vocab: VocabId, order: usize, seed: u64, init_scale: f64) -> Self {
        assert!(order >= 1, "order must be at least 1");
        Self {
            order,
            vocab,
            seed,
            init_scale,
            rows: BTreeMap::new(),
        }
    }

    pub fn uniform(vocab: VocabId, order: usize) -> Self {
        Self::new(vocab, order, 0, 0.0)
    }

    pub(crate) fn from_parts(
        vocab: VocabId,
        order: usize,
        seed: u64,
        init_scale: f64,
        rows: BTreeMap<RowKey, Vec<f64>>,
    ) -> Self {
        Self {
            order,
            vocab,
            seed,
            init_scale,
            rows,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.size as usize
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale
    }

    /// Rows that have been written, in key order.
    pub fn rows(&self) -> &BTreeMap<RowKey, Vec<f64>> {
        &self.rows
    }

    /// Splits a leading `<sys> … </sys>` block off a context.
    pub fn split_context(context: &[u32]) -> (Option<Vec<u32>>, &[u32]) {
        if context.first() == Some(&SYS_OPEN) {
            if let Some(end) = context.iter().position(|&t| t == SYS_CLOSE) {
                return (Some(context[1..end].to_vec()), &context[end + 1..]);
            }
        }
        (None, context)
    }

    pub fn key_for(&self, condition: Option<&[u32]>, history: &[u32]) -> RowKey {
        let mut context = vec![BOS; self.order];
        let take = history.len().min(self.order);
        context[self.order - take..].copy_from_slice(&history[history.len() - take..]);
        RowKey {
            condition: condition.map(<[u32]>::to_vec),
            context,
        }
    }

    fn init_row(&self, context: &[u32]) -> Vec<f64> {
        let v = self.vocab_size();
        if self.init_scale == 0.0 {
            return vec![0.0; v];
        }
        let mut h = splitmix(self.seed);
        for &t in context {
            h = splitmix(h ^ t as u64);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        (0..v)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                self.init_scale * z
            })
            .collect()
    }

    /// Logits currently used for `key`.
    pub fn effective_row(&self, key: &RowKey) -> Cow<'_, [f64]> {
        if let Some(row) = self.rows.get(key) {
            return Cow::Borrowed(row);
        }
        if key.condition.is_some() {
            return self.effective_row(&key.base());
        }
        Cow::Owned(self.init_row(&key.context))
    }

    /// Mutable row for `key`, materialized from its effective value.
    pub fn row_mut(&mut self, key: &RowKey) -> &mut Vec<f64> {
        if !self.rows.contains_key(key) {
            let row = self.effective_row(key).into_owned();
            self.rows.insert(key.clone(), row);
        }
        self.rows.get_mut(key).expect("just inserted")
    }

    pub fn set_row(&mut self, key: RowKey, logits: Vec<f64>) {
        assert_eq!(logits.len(), self.vocab_size(), "row width must equal vocab size");
        self.rows.insert(key, logits);
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<(), VocabError> {
        TokenSeq::new(tokens.to_vec(), self.vocab.clone()).map(|_| ())
    }

    /// Per-token log-probabilities over raw ids.
    pub fn token_logprobs(&self, context: &[u32], target: &[u32]) -> Result<Vec<f64>, LmError> {
        self.check_tokens(context)?;
        self.check_tokens(target)?;
        let (condition, history) = Self::split_context(context);
        let mut history = history.to_vec();
        let mut out = Vec::with_capacity(target.len());
        for &t in target {
            let key = self.key_for(condition.as_deref(), &history);
            let row = self.effective_row(&key);
            out.push(log_prob_of(&row, t as usize));
            history.push(t);
        }
        Ok(out)
    }

    /// Adds `coef · ∂/∂logits Σ log p(target | context)` into `grad`.
    pub fn accumulate_logprob_grad(
        &self,
        context: &[u32],
        target: &[u32],
        coef: f64,
        grad: &mut LogitGrad,
    ) -> Result<(), LmError> {
        self.check_tokens(context)?;
        self.check_tokens(target)?;
        let width = self.vocab_size();
        let (condition, history) = Self::split_context(context);
        let mut history = history.to_vec();
        for &t in target {
            let key = self.key_for(condition.as_deref(), &history);
            let probs = softmax(&self.effective_row(&key));
            let g = grad.row_mut(key, width);
            for (gi, p) in g.iter_mut().zip(&probs) {
                *gi -= coef * p;
            }
            g[t as usize] += coef;
            history.push(t);
        }
        Ok(())
    }

    /// `logits += lr · grad` for every row in `grad`.
    pub fn apply(&mut self, grad: &LogitGrad, lr: f64) {
        if lr == 0.0 {
            return;
        }
        for (key, g) in grad.iter() {
            let row = self.row_mut(key);
            for (r, d) in row.iter_mut().zip(g) {
                *r += lr * d;
            }
        }
    }

    /// Maximum-likelihood SGD from an empty context, one step per sequence.
    /// Returns the mean negative log-likelihood seen in each epoch.
    pub fn fit_sequences(&mut self, seqs: &[TokenSeq], cfg: &MleConfig) -> Result<Vec<f64>, LmError> {
        for s in seqs {
            self.vocab.ensure_same(s.vocab_id())?;
        }
        let mut history = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            let mut total = 0.0;
            for s in seqs {
                total -= self.token_logprobs(&[], s.tokens())?.iter().sum::<f64>();
                let mut grad = LogitGrad::default();
                self.accumulate_logprob_grad(&[], s.tokens(), 1.0, &mut grad)?;
                self.apply(&grad, cfg.learning_rate);
            }
            history.push(total / seqs.len().max(1) as f64);
        }
        Ok(history)
    }

    fn generate_raw(&self, context: &[u32], cfg: &GenerationConfig) -> Result<Vec<u32>, LmError> {
        cfg.validate()?;
        self.check_tokens(context)?;
        let (condition, history) = Self::split_context(context);
        let mut history = history.to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut out = Vec::with_capacity(cfg.max_tokens);
        for _ in 0..cfg.max_tokens {
            let key = self.key_for(condition.as_deref(), &history);
            let next = sample_next(&self.effective_row(&key), cfg.temperature, cfg.top_p, &mut rng) as u32;
            out.push(next);
            history.push(next);
        }
        Ok(out)
    }
}

/// `log softmax(row)[t]` without materializing the whole distribution.
fn log_prob_of(row: &[f64], t: usize) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = row.iter().map(|&l| (l - max).exp()).sum();
    row[t] - max - z.ln()
}

impl LanguageModel for TabularLm {
    fn vocab_id(&self) -> &VocabId {
        &self.vocab
    }

    fn score(&self, context: &TokenSeq, target: &TokenSeq) -> Result<Vec<f64>, LmError> {
        self.vocab.ensure_same(context.vocab_id())?;
        self.vocab.ensure_same(target.vocab_id())?;
        self.token_logprobs(context.tokens(), target.tokens())
    }

    fn generate(&self, context: &TokenSeq, cfg: &GenerationConfig) -> Result<TokenSeq, LmError> {
        self.vocab.ensure_same(context.vocab_id())?;
        let tokens = self.generate_raw(context.tokens(), cfg)?;
        Ok(TokenSeq::new(tokens, self.vocab.clone())?)
    }
}
