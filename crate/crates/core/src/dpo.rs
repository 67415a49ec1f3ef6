//! Direct preference optimization of a [`TabularLm`] against a frozen copy of
//! itself.
//!
//! For a pair with chosen `c` and rejected `r` the loss is
//! `-log σ(β·[(log πθ(c) − log πref(c)) − (log πθ(r) − log πref(r))])`,
//! where each log-probability is summed over the target tokens only, given
//! the pair's context (its system-prompt block, or nothing). Its gradient
//! with respect to the policy logits is `−β·σ(−z)·(∇log πθ(c) − ∇log πθ(r))`.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::{LanguageModel, LmError, LogitGrad, TabularLm};
use crate::metrics::WordTokenizer;
use crate::pipeline::PreferencePair;
use crate::vocab::{TokenSeq, Vocab, VocabError};

#[derive(Debug, Error)]
pub enum DpoError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("policy and reference differ in shape: {0}")]
    ShapeMismatch(String),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("loss became non-finite at step {step}")]
    Diverged { step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DpoError {
    pub fn is_remote(&self) -> bool {
        matches!(self, DpoError::Lm(e) if e.is_remote())
    }
}

impl From<VocabError> for DpoError {
    fn from(e: VocabError) -> Self {
        DpoError::Lm(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for DpoConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            learning_rate: 1.0,
            epochs: 2,
            batch_size: 1,
            seed: 0,
        }
    }
}

impl DpoConfig {
    pub fn validate(&self) -> Result<(), DpoError> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(DpoError::InvalidConfig(format!("beta {} must be > 0", self.beta)));
        }
        if self.epochs == 0 {
            return Err(DpoError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(DpoError::InvalidConfig("batch size must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() {
            return Err(DpoError::InvalidConfig("learning rate must be finite".into()));
        }
        Ok(())
    }
}

/// The policy being tuned and the frozen reference it is measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPair {
    pub policy: TabularLm,
    reference: TabularLm,
}

impl TrainedPair {
    /// Starts from two identical copies of `model`.
    pub fn from_model(model: TabularLm) -> Self {
        Self {
            policy: model.clone(),
            reference: model,
        }
    }

    pub fn new(policy: TabularLm, reference: TabularLm) -> Result<Self, DpoError> {
        if policy.vocab_id() != reference.vocab_id() || policy.order() != reference.order() {
            return Err(DpoError::ShapeMismatch(format!(
                "policy {} order {}, reference {} order {}",
                policy.vocab_id(),
                policy.order(),
                reference.vocab_id(),
                reference.order()
            )));
        }
        Ok(Self { policy, reference })
    }

    pub fn reference(&self) -> &TabularLm {
        &self.reference
    }
}

/// A preference pair in token form. `context` is the system-prompt block or
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPair {
    pub context: TokenSeq,
    pub chosen: TokenSeq,
    pub rejected: TokenSeq,
}

pub fn encode_pair(pair: &PreferencePair, vocab: &Vocab, tokenizer: &WordTokenizer) -> EncodedPair {
    EncodedPair {
        context: match &pair.system_prompt {
            Some(sys) => vocab.encode_system_prompt(tokenizer, sys),
            None => TokenSeq::empty(vocab.id()),
        },
        chosen: vocab.encode(tokenizer, &pair.chosen),
        rejected: vocab.encode(tokenizer, &pair.rejected),
    }
}

/// Quantities of one pair under the current policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    /// `β·[(log πθ(c) − log πref(c)) − (log πθ(r) − log πref(r))]`.
    pub z: f64,
    pub loss: f64,
    /// `log πθ(c) − log πθ(r)`.
    pub margin: f64,
}

fn logprob(model: &TabularLm, context: &TokenSeq, target: &TokenSeq) -> Result<f64, DpoError> {
    model.vocab_id().ensure_same(context.vocab_id())?;
    model.vocab_id().ensure_same(target.vocab_id())?;
    if target.is_empty() {
        return Err(LmError::EmptyTarget.into());
    }
    Ok(model.token_logprobs(context.tokens(), target.tokens())?.iter().sum())
}

/// `−log σ(z)` without overflow.
fn softplus_neg(z: f64) -> f64 {
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `σ(−z)` without overflow.
fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn pair_terms(tp: &TrainedPair, pair: &EncodedPair, beta: f64) -> Result<PairTerms, DpoError> {
    let pc = logprob(&tp.policy, &pair.context, &pair.chosen)?;
    let pr = logprob(&tp.policy, &pair.context, &pair.rejected)?;
    let rc = logprob(&tp.reference, &pair.context, &pair.chosen)?;
    let rr = logprob(&tp.reference, &pair.context, &pair.rejected)?;
    let z = beta * ((pc - rc) - (pr - rr));
    Ok(PairTerms {
        z,
        loss: softplus_neg(z),
        margin: pc - pr,
    })
}

pub fn dpo_loss(tp: &TrainedPair, pair: &EncodedPair, beta: f64) -> Result<f64, DpoError> {
    Ok(pair_terms(tp, pair, beta)?.loss)
}

/// Gradient of [`dpo_loss`] with respect to the policy logits. Only rows
/// visited while scoring the chosen or rejected sequence appear.
pub fn dpo_grad(tp: &TrainedPair, pair: &EncodedPair, beta: f64) -> Result<LogitGrad, DpoError> {
    let terms = pair_terms(tp, pair, beta)?;
    let mut grad = LogitGrad::default();
    add_dpo_grad(tp, pair, beta, terms.z, 1.0, &mut grad)?;
    Ok(grad)
}

fn add_dpo_grad(
    tp: &TrainedPair,
    pair: &EncodedPair,
    beta: f64,
    z: f64,
    weight: f64,
    grad: &mut LogitGrad,
) -> Result<(), DpoError> {
    let coef = -beta * sigmoid_neg(z) * weight;
    let ctx = pair.context.tokens();
    tp.policy.accumulate_logprob_grad(ctx, pair.chosen.tokens(), coef, grad)?;
    tp.policy.accumulate_logprob_grad(ctx, pair.rejected.tokens(), -coef, grad)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    /// Mean loss over the batch, before the update.
    pub loss: f64,
    /// Mean `log πθ(c) − log πθ(r)` over the batch, before the update.
    pub margin_mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub steps: Vec<StepRecord>,
}

impl TrainingLog {
    /// Mean of the step margins within each epoch.
    pub fn epoch_margins(&self) -> Vec<f64> {
        self.epoch_means(|s| s.margin_mean)
    }

    pub fn epoch_losses(&self) -> Vec<f64> {
        self.epoch_means(|s| s.loss)
    }

    fn epoch_means(&self, f: impl Fn(&StepRecord) -> f64) -> Vec<f64> {
        let epochs = self.steps.iter().map(|s| s.epoch + 1).max().unwrap_or(0);
        (0..epochs)
            .map(|e| {
                let xs: Vec<f64> = self.steps.iter().filter(|s| s.epoch == e).map(&f).collect();
                xs.iter().sum::<f64>() / xs.len().max(1) as f64
            })
            .collect()
    }

    /// CSV with header `step,loss,margin_mean`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "step,loss,margin_mean")?;
        for s in &self.steps {
            writeln!(w, "{},{},{}", s.step, s.loss, s.margin_mean)?;
        }
        Ok(())
    }
}

/// Seeded-shuffle minibatch SGD on the preference loss. Per-pair gradients
/// within a batch are computed in parallel and summed in batch order, so the
/// result is bitwise reproducible. The reference model is never touched.
pub fn train_dpo(tp: &mut TrainedPair, data: &[EncodedPair], cfg: &DpoConfig) -> Result<TrainingLog, DpoError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(DpoError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainingLog::default();
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let weight = 1.0 / batch.len() as f64;
            let shared: &TrainedPair = tp;
            let parts: Vec<(PairTerms, LogitGrad)> = batch
                .par_iter()
                .map(|&i| {
                    let terms = pair_terms(shared, &data[i], cfg.beta)?;
                    let mut g = LogitGrad::default();
                    add_dpo_grad(shared, &data[i], cfg.beta, terms.z, weight, &mut g)?;
                    Ok((terms, g))
                })
                .collect::<Result<_, DpoError>>()?;
            let mut grad = LogitGrad::default();
            let (mut loss, mut margin) = (0.0, 0.0);
            for (terms, g) in &parts {
                loss += terms.loss * weight;
                margin += terms.margin * weight;
                grad.add_scaled(g, 1.0);
            }
            if !loss.is_finite() {
                return Err(DpoError::Diverged { step });
            }
            tp.policy.apply(&grad, -cfg.learning_rate);
            log.steps.push(StepRecord {
                step,
                epoch,
                loss,
                margin_mean: margin,
            });
            step += 1;
        }
    }
    Ok(log)
}

/// How many pairs have a rejected sequence the policy now rates above the
/// reference.
pub fn rejected_increases(tp: &TrainedPair, data: &[EncodedPair]) -> Result<usize, DpoError> {
    let mut count = 0;
    for p in data {
        if logprob(&tp.policy, &p.context, &p.rejected)? > logprob(&tp.reference, &p.context, &p.rejected)? {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NllShift {
    pub nll_before: f64,
    pub nll_after: f64,
}

impl NllShift {
    pub fn delta(&self) -> f64 {
        self.nll_after - self.nll_before
    }
}

/// Negative log-likelihood of each snippet from an empty context under both
/// models.
pub fn nll_shift_report<M: LanguageModel + ?Sized>(
    before: &M,
    after: &M,
    snippets: &[TokenSeq],
) -> Result<Vec<NllShift>, DpoError> {
    snippets
        .iter()
        .map(|s| {
            let empty = TokenSeq::empty(s.vocab_id().clone());
            Ok(NllShift {
                nll_before: -crate::lm::seq_logprob(before, &empty, s)?,
                nll_after: -crate::lm::seq_logprob(after, &empty, s)?,
            })
        })
        .collect()
}

pub fn mean_delta(rows: &[NllShift]) -> f64 {
    rows.iter().map(NllShift::delta).sum::<f64>() / rows.len().max(1) as f64
}

/// CSV with header `group,snippet,nll_before,nll_after,delta`, one block per
/// named group.
pub fn write_nll_csv<W: Write>(w: &mut W, groups: &[(&str, &[NllShift])]) -> std::io::Result<()> {
    writeln!(w, "group,snippet,nll_before,nll_after,delta")?;
    for (name, rows) in groups {
        for (i, r) in rows.iter().enumerate() {
            writeln!(w, "{name},{i},{},{},{}", r.nll_before, r.nll_after, r.delta())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{seq_logprob, RowKey};
    use crate::vocab::{VocabId, SYS_CLOSE, SYS_OPEN};
    use proptest::prelude::*;

    const V: u32 = 8;

    fn vid() -> VocabId {
        VocabId::new("p", V)
    }

    fn seq(t: &[u32]) -> TokenSeq {
        TokenSeq::new(t.to_vec(), vid()).unwrap()
    }

    fn pair(ctx: &[u32], c: &[u32], r: &[u32]) -> EncodedPair {
        EncodedPair {
            context: seq(ctx),
            chosen: seq(c),
            rejected: seq(r),
        }
    }

    /// Hand-rolled softmax chain over the effective rows.
    fn oracle_logprob(m: &TabularLm, ctx: &[u32], tgt: &[u32]) -> f64 {
        let (cond, hist) = TabularLm::split_context(ctx);
        let mut hist = hist.to_vec();
        let mut total = 0.0;
        for &t in tgt {
            let row = m.effective_row(&m.key_for(cond.as_deref(), &hist)).into_owned();
            let z: f64 = row.iter().map(|x| x.exp()).sum();
            total += (row[t as usize].exp() / z).ln();
            hist.push(t);
        }
        total
    }

    fn oracle_loss(tp: &TrainedPair, p: &EncodedPair, beta: f64) -> f64 {
        let c = p.context.tokens();
        let inner = (oracle_logprob(&tp.policy, c, p.chosen.tokens()) - oracle_logprob(tp.reference(), c, p.chosen.tokens()))
            - (oracle_logprob(&tp.policy, c, p.rejected.tokens()) - oracle_logprob(tp.reference(), c, p.rejected.tokens()));
        -(1.0 / (1.0 + (-beta * inner).exp())).ln()
    }

    fn perturbed(seed: u64) -> TrainedPair {
        let base = TabularLm::new(vid(), 2, seed, 0.8);
        let mut policy = base.clone();
        let mut g = LogitGrad::default();
        policy.accumulate_logprob_grad(&[], &[4, 5, 6, 7], 1.0, &mut g).unwrap();
        policy.accumulate_logprob_grad(&[SYS_OPEN, 5, SYS_CLOSE], &[6, 4], -0.5, &mut g).unwrap();
        policy.apply(&g, 0.7);
        TrainedPair::new(policy, base).unwrap()
    }

    #[test]
    fn fresh_copy_gives_ln_two() {
        let tp = TrainedPair::from_model(TabularLm::new(vid(), 2, 3, 1.0));
        let loss = dpo_loss(&tp, &pair(&[], &[4, 5], &[6]), 0.1).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn matches_hand_rolled_recomputation() {
        for seed in 0..20 {
            let tp = perturbed(seed);
            for p in [pair(&[], &[4, 5, 6], &[6, 7, 4]), pair(&[SYS_OPEN, 5, SYS_CLOSE], &[6, 4, 4], &[5, 5, 7])] {
                let got = dpo_loss(&tp, &p, 0.1).unwrap();
                assert!((got - oracle_loss(&tp, &p, 0.1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn larger_beta_lowers_loss_for_positive_margin() {
        let tp = perturbed(1);
        let p = pair(&[], &[4, 5, 6, 7], &[7, 6, 5, 4]);
        let z = pair_terms(&tp, &p, 1.0).unwrap().z;
        assert!(z > 0.0);
        let losses: Vec<f64> = [0.05, 0.1, 0.5, 1.0].iter().map(|&b| dpo_loss(&tp, &p, b).unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn loss_stays_finite_at_extreme_margins() {
        let mut tp = perturbed(2);
        let key = tp.policy.key_for(None, &[]);
        let mut row = vec![0.0; V as usize];
        row[4] = 2000.0;
        tp.policy.set_row(key, row);
        let good = dpo_loss(&tp, &pair(&[], &[4], &[5]), 1.0).unwrap();
        let bad = dpo_loss(&tp, &pair(&[], &[5], &[4]), 1.0).unwrap();
        assert!((0.0..1e-12).contains(&good));
        assert!(bad.is_finite() && bad > 1000.0);
    }

    #[test]
    fn gradient_at_reference_is_quarter_beta_difference() {
        let tp = TrainedPair::from_model(TabularLm::new(vid(), 2, 9, 1.0));
        let p = pair(&[], &[4, 5], &[6, 7]);
        let g = dpo_grad(&tp, &p, 0.2).unwrap();
        let mut expect = LogitGrad::default();
        tp.policy.accumulate_logprob_grad(&[], &[4, 5], -0.1, &mut expect).unwrap();
        tp.policy.accumulate_logprob_grad(&[], &[6, 7], 0.1, &mut expect).unwrap();
        assert_eq!(g.len(), expect.len());
        for (k, row) in expect.iter() {
            let got = g.get(k).unwrap();
            assert!(row.iter().zip(got).all(|(a, b)| (a - b).abs() < 1e-15));
        }
        // descending the gradient raises the chosen token's logit
        let first = g.get(&tp.policy.key_for(None, &[])).unwrap();
        assert!(first[4] < 0.0 && first[6] > 0.0);
        assert!(g.get(&tp.policy.key_for(None, &[1, 1])).is_none());
    }

    fn central_difference(tp: &TrainedPair, p: &EncodedPair, beta: f64, key: &RowKey, j: usize, h: f64) -> f64 {
        let mut plus = tp.clone();
        plus.policy.row_mut(key)[j] += h;
        let mut minus = tp.clone();
        minus.policy.row_mut(key)[j] -= h;
        (dpo_loss(&plus, p, beta).unwrap() - dpo_loss(&minus, p, beta).unwrap()) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(seed in 0u64..10_000,
                                               c in prop::collection::vec(4u32..V, 1..5),
                                               r in prop::collection::vec(4u32..V, 1..5),
                                               sys in any::<bool>()) {
            let tp = perturbed(seed);
            let ctx: &[u32] = if sys { &[SYS_OPEN, 6, SYS_CLOSE] } else { &[] };
            let p = pair(ctx, &c, &r);
            let g = dpo_grad(&tp, &p, 0.1).unwrap();
            for (key, row) in g.iter() {
                for (j, &analytic) in row.iter().enumerate() {
                    let numeric = central_difference(&tp, &p, 0.1, key, j, 1e-5);
                    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                    prop_assert!((analytic - numeric).abs() / scale < 1e-4,
                        "key {key:?} j {j}: {analytic} vs {numeric}");
                }
            }
        }

        #[test]
        fn row_shift_leaves_loss_unchanged(seed in 0u64..1000, shift in -50.0f64..50.0) {
            let tp = perturbed(seed);
            let p = pair(&[], &[4, 5, 6], &[7, 6]);
            let before = dpo_loss(&tp, &p, 0.1).unwrap();
            let mut shifted = tp.clone();
            let key = shifted.policy.key_for(None, &[4]);
            for x in shifted.policy.row_mut(&key) {
                *x += shift;
            }
            prop_assert!((dpo_loss(&shifted, &p, 0.1).unwrap() - before).abs() < 1e-9);
            prop_assert!(before >= 0.0);
        }
    }

    #[test]
    fn training_grows_margin_and_leaves_reference_alone() {
        let model = TabularLm::new(vid(), 2, 4, 0.5);
        let mut tp = TrainedPair::from_model(model.clone());
        let data = vec![pair(&[], &[4, 5, 6, 7], &[4, 6, 5, 7])];
        let cfg = DpoConfig { learning_rate: 1.0, epochs: 30, ..DpoConfig::default() };
        let log = train_dpo(&mut tp, &data, &cfg).unwrap();
        let m = log.epoch_margins();
        assert!(m.last().unwrap() > m.first().unwrap());
        assert_eq!(tp.reference(), &model);
        assert_eq!(rejected_increases(&tp, &data).unwrap(), 0);

        // the mirrored pair pushes the other way
        let mut rev = TrainedPair::from_model(model.clone());
        let mirrored = vec![pair(&[], &[4, 6, 5, 7], &[4, 5, 6, 7])];
        train_dpo(&mut rev, &mirrored, &cfg).unwrap();
        let empty = TokenSeq::empty(vid());
        let prefers_first = |m: &TabularLm| {
            seq_logprob(m, &empty, &seq(&[4, 5, 6, 7])).unwrap() - seq_logprob(m, &empty, &seq(&[4, 6, 5, 7])).unwrap()
        };
        assert!(prefers_first(&tp.policy) > prefers_first(&model));
        assert!(prefers_first(&rev.policy) < prefers_first(&model));
    }

    #[test]
    fn zero_learning_rate_and_errors() {
        let model = TabularLm::new(vid(), 2, 4, 0.5);
        let mut tp = TrainedPair::from_model(model.clone());
        let data = vec![pair(&[], &[4], &[5]), pair(&[], &[6], &[7])];
        let log = train_dpo(&mut tp, &data, &DpoConfig { learning_rate: 0.0, batch_size: 2, ..Default::default() }).unwrap();
        assert_eq!(tp.policy, model);
        assert_eq!(log.steps.len(), 2);
        assert!(matches!(train_dpo(&mut tp, &[], &DpoConfig::default()), Err(DpoError::EmptyDataset)));
        assert!(train_dpo(&mut tp, &data, &DpoConfig { beta: 0.0, ..Default::default() }).is_err());
        let other = EncodedPair {
            context: TokenSeq::empty(VocabId::new("q", V)),
            chosen: TokenSeq::new(vec![4], VocabId::new("q", V)).unwrap(),
            rejected: TokenSeq::new(vec![5], VocabId::new("q", V)).unwrap(),
        };
        assert!(dpo_loss(&tp, &other, 0.1).is_err());
        let mismatched = TrainedPair::new(model.clone(), TabularLm::new(vid(), 3, 4, 0.5));
        assert!(mismatched.is_err());
    }

    #[test]
    fn divergence_reports_step() {
        let mut tp = TrainedPair::from_model(TabularLm::new(vid(), 1, 4, 0.5));
        let mut row = vec![0.0; V as usize];
        row[5] = f64::INFINITY;
        tp.policy.set_row(tp.policy.key_for(None, &[]), row);
        let data = vec![pair(&[], &[4], &[5])];
        assert!(matches!(train_dpo(&mut tp, &data, &DpoConfig::default()), Err(DpoError::Diverged { step: 0 })));
    }

    #[test]
    fn batched_training_is_bitwise_reproducible() {
        let data: Vec<_> = (0..12u32)
            .map(|i| pair(&[], &[4 + i % 4, 5, 6], &[7 - i % 3, 4]))
            .collect();
        let cfg = DpoConfig { learning_rate: 2.0, epochs: 3, batch_size: 5, seed: 11, ..Default::default() };
        let run = || {
            let mut tp = TrainedPair::from_model(TabularLm::new(vid(), 2, 1, 0.5));
            let log = train_dpo(&mut tp, &data, &cfg).unwrap();
            let mut csv = Vec::new();
            log.write_csv(&mut csv).unwrap();
            (tp.policy, csv)
        };
        let (a, csv_a) = run();
        let (b, csv_b) = run();
        assert_eq!(csv_a, csv_b);
        for ((ka, ra), (kb, rb)) in a.rows().iter().zip(b.rows()) {
            assert_eq!(ka, kb);
            assert!(ra.iter().zip(rb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert!(String::from_utf8(csv_a).unwrap().starts_with("step,loss,margin_mean\n0,"));
    }

    #[test]
    fn nll_shift_is_zero_for_identical_models() {
        let m = TabularLm::new(vid(), 2, 4, 0.5);
        let rows = nll_shift_report(&m, &m, &[seq(&[4, 5]), seq(&[6])]).unwrap();
        assert!(rows.iter().all(|r| r.delta() == 0.0 && r.nll_before > 0.0));
        let mut csv = Vec::new();
        write_nll_csv(&mut csv, &[("memorized", &rows)]).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    }
}
