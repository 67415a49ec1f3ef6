//! A desk-scale end-to-end experiment: a synthetic pseudo-word corpus, a
//! tabular model pretrained to memorize part of it, and the full
//! detect → paraphrase → pair → optimize → evaluate loop.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dpo::{
    encode_pair, mean_delta, nll_shift_report, rejected_increases, train_dpo, DpoConfig, DpoError, NllShift,
    TrainedPair, TrainingLog,
};
use crate::eval::{eval_extraction, EvalError, ExtractionSpec, SystemPromptChoice};
use crate::lm::{GenerationConfig, MleConfig, TabularLm, VocabModel};
use crate::metrics::{WordSeq, WordTokenizer};
use crate::pipeline::{
    build_pairs, compose_mixture, detect_memorized, paraphrase_all, DetectConfig, MixtureSpec, PairMode,
    PairSource, PipelineError, PreferencePair, StubParaphraser, COPY_NO, COPY_YES,
};
use crate::vocab::{TokenSeq, Vocab};

#[derive(Debug, Error)]
pub enum ToyError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Dpo(#[from] DpoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Lm(#[from] crate::lm::LmError),
    #[error("invalid toy config: {0}")]
    InvalidConfig(String),
}

impl ToyError {
    pub fn is_remote(&self) -> bool {
        match self {
            ToyError::Pipeline(e) => e.is_remote(),
            ToyError::Dpo(e) => e.is_remote(),
            ToyError::Eval(e) => e.is_remote(),
            ToyError::Lm(e) => e.is_remote(),
            ToyError::InvalidConfig(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub seed: u64,
    pub num_docs: usize,
    pub doc_len: usize,
    /// Documents `0..num_memorized` are pretrained on.
    pub num_memorized: usize,
    /// The last `num_held_out` documents serve as the unseen comparison set.
    pub num_held_out: usize,
    pub base_words: usize,
    /// Share of base words that have a synonym the paraphraser can swap in.
    pub synonym_fraction: f64,
    pub generic_pool: usize,
    pub order: usize,
    pub init_scale: f64,
    pub pretrain: MleConfig,
    pub detect: DetectConfig,
    pub dpo: DpoConfig,
    pub mode: PairMode,
    pub paraphrase_fraction: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_docs: 200,
            doc_len: 100,
            num_memorized: 50,
            num_held_out: 50,
            base_words: 400,
            synonym_fraction: 0.6,
            generic_pool: 100,
            order: 2,
            init_scale: 0.5,
            pretrain: MleConfig {
                epochs: 4,
                learning_rate: 1.0,
            },
            detect: DetectConfig::default(),
            dpo: DpoConfig {
                beta: 0.1,
                learning_rate: 100.0,
                epochs: 2,
                batch_size: 1,
                seed: 0,
            },
            mode: PairMode::Plain,
            paraphrase_fraction: 1.0,
        }
    }
}

impl ToyConfig {
    fn validate(&self) -> Result<(), ToyError> {
        let bad = |m: &str| Err(ToyError::InvalidConfig(m.to_string()));
        if self.num_memorized + self.num_held_out > self.num_docs {
            return bad("memorized and held-out sets overlap");
        }
        if self.doc_len < self.detect.prefix_len + self.detect.cont_len {
            return bad("documents are shorter than the detection window");
        }
        if self.base_words < 2 || !(0.0..=1.0).contains(&self.synonym_fraction) {
            return bad("need at least two base words and a synonym fraction in [0, 1]");
        }
        Ok(())
    }
}

/// Synthetic corpus over pronounceable pseudo-words.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyCorpus {
    pub vocab: Vocab,
    pub docs: Vec<String>,
    pub synonyms: BTreeMap<String, String>,
    pub generic: Vec<PreferencePair>,
    pub num_memorized: usize,
    pub num_held_out: usize,
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn pseudo_words(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.random_range(0..ONSETS.len())],
                    VOWELS[rng.random_range(0..VOWELS.len())]
                )
            })
            .collect();
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

impl ToyCorpus {
    /// Builds the corpus. Memorized documents are drawn so that no
    /// `order`-word context repeats among them, which keeps each one exactly
    /// recoverable by an order-`order` model.
    pub fn generate(cfg: &ToyConfig) -> Result<Self, ToyError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let num_syn = (cfg.base_words as f64 * cfg.synonym_fraction).round() as usize;
        let all = pseudo_words(&mut rng, cfg.base_words + num_syn);
        let (base, syn) = all.split_at(cfg.base_words);
        let synonyms: BTreeMap<String, String> = base.iter().cloned().zip(syn.iter().cloned()).collect();

        let tokenizer = WordTokenizer::default();
        let vocab = Vocab::build("toy", &tokenizer, all.iter().map(String::as_str), &[COPY_YES, COPY_NO]);

        let draw = |rng: &mut ChaCha8Rng, len: usize| -> Vec<&str> {
            (0..len).map(|_| base[rng.random_range(0..base.len())].as_str()).collect()
        };
        let mut contexts: HashSet<Vec<&str>> = HashSet::new();
        let mut docs = Vec::with_capacity(cfg.num_docs);
        for i in 0..cfg.num_docs {
            let words = loop {
                let words = draw(&mut rng, cfg.doc_len);
                if i >= cfg.num_memorized {
                    break words;
                }
                let grams: Vec<Vec<&str>> = words.windows(cfg.order).map(<[&str]>::to_vec).collect();
                let distinct: HashSet<&Vec<&str>> = grams.iter().collect();
                if distinct.len() == grams.len() && grams.iter().all(|g| !contexts.contains(g)) {
                    contexts.extend(grams);
                    break words;
                }
            };
            docs.push(words.join(" "));
        }
        let generic = (0..cfg.generic_pool)
            .map(|_| PreferencePair {
                system_prompt: None,
                chosen: draw(&mut rng, cfg.detect.prefix_len + cfg.detect.cont_len).join(" "),
                rejected: draw(&mut rng, cfg.detect.prefix_len + cfg.detect.cont_len).join(" "),
                source: PairSource::GenericPreference,
                origin_doc_id: None,
            })
            .collect();
        Ok(Self {
            vocab,
            docs,
            synonyms,
            generic,
            num_memorized: cfg.num_memorized,
            num_held_out: cfg.num_held_out,
        })
    }

    pub fn memorized(&self) -> &[String] {
        &self.docs[..self.num_memorized]
    }

    pub fn held_out(&self) -> &[String] {
        &self.docs[self.docs.len() - self.num_held_out..]
    }

    pub fn encode(&self, text: &str) -> TokenSeq {
        self.vocab.encode(&WordTokenizer::default(), text)
    }
}

/// Pretrains a fresh model on the memorized documents.
pub fn pretrain(corpus: &ToyCorpus, cfg: &ToyConfig) -> Result<TabularLm, ToyError> {
    let mut model = TabularLm::new(corpus.vocab.id(), cfg.order, cfg.seed, cfg.init_scale);
    let seqs: Vec<TokenSeq> = corpus.memorized().iter().map(|d| corpus.encode(d)).collect();
    model.fit_sequences(&seqs, &cfg.pretrain)?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub config: ToyConfig,
    pub vocab_size: u32,
    pub detected: usize,
    pub detected_exact: usize,
    /// Memorized documents that the detector returned.
    pub memorized_detected: usize,
    pub pairs: usize,
    pub generic_pairs: usize,
    pub extraction_before: f64,
    pub extraction_after: f64,
    pub extraction_relative_drop: f64,
    pub held_out_extraction_before: f64,
    pub held_out_extraction_after: f64,
    /// Memorized-set extraction after training, per inference-time prompt.
    pub extraction_after_by_prompt: BTreeMap<SystemPromptChoice, f64>,
    pub nll_delta_memorized: f64,
    pub nll_delta_held_out: f64,
    pub epoch_margins: Vec<f64>,
    pub epoch_losses: Vec<f64>,
    pub rejected_increases: usize,
}

pub struct ToyRun {
    pub corpus: ToyCorpus,
    pub pretrained: TabularLm,
    pub tuned: TabularLm,
    pub dataset: Vec<PreferencePair>,
    pub log: TrainingLog,
    pub nll_memorized: Vec<NllShift>,
    pub nll_held_out: Vec<NllShift>,
    pub report: ToyReport,
}

fn extraction(
    model: &TabularLm,
    corpus: &ToyCorpus,
    docs: &[String],
    cfg: &ToyConfig,
    prompt: SystemPromptChoice,
) -> Result<f64, ToyError> {
    let tok = WordTokenizer::default();
    let snippets: Vec<WordSeq> = docs.iter().map(|d| tok.tokenize(d)).collect();
    let spec = ExtractionSpec {
        prefix_len: cfg.detect.prefix_len,
        cont_len: cfg.detect.cont_len,
    };
    let gen = VocabModel::new(model, &corpus.vocab);
    Ok(eval_extraction(&gen, &snippets, spec, prompt, &GenerationConfig::greedy(spec.cont_len))?.extraction_ratio)
}

/// Runs the whole experiment from a config.
pub fn run_toy(cfg: &ToyConfig) -> Result<ToyRun, ToyError> {
    let corpus = ToyCorpus::generate(cfg)?;
    let pretrained = pretrain(&corpus, cfg)?;
    run_from_pretrained(cfg, corpus, pretrained)
}

/// Runs everything after pretraining, so several variants can share one
/// pretrained model.
pub fn run_from_pretrained(cfg: &ToyConfig, corpus: ToyCorpus, pretrained: TabularLm) -> Result<ToyRun, ToyError> {
    let docs: Vec<(u64, TokenSeq)> = corpus
        .docs
        .iter()
        .enumerate()
        .map(|(i, d)| (i as u64, corpus.encode(d)))
        .collect();
    let detection = detect_memorized(&pretrained, &docs, &cfg.detect)?;
    let records: Vec<_> = detection.segments.iter().map(|s| s.to_record(&corpus.vocab)).collect();

    let stub = StubParaphraser::new(corpus.synonyms.clone());
    let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
    let paraphrases = paraphrase_all(&stub, &texts, &GenerationConfig::paraphrasing(0, cfg.seed))
        .into_iter()
        .map(|p| p.map(|p| p.text))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs = build_pairs(&records, &paraphrases, cfg.mode, cfg.seed)?;
    let dataset = compose_mixture(
        &pairs,
        &corpus.generic,
        &MixtureSpec {
            paraphrase_fraction: cfg.paraphrase_fraction,
            seed: cfg.seed,
        },
    )?;

    let tok = WordTokenizer::default();
    let encoded: Vec<_> = dataset.iter().map(|p| encode_pair(p, &corpus.vocab, &tok)).collect();
    let mut tp = TrainedPair::from_model(pretrained.clone());
    let log = train_dpo(&mut tp, &encoded, &cfg.dpo)?;
    let increases = rejected_increases(&tp, &encoded)?;
    let tuned = tp.policy;

    let window = cfg.detect.prefix_len + cfg.detect.cont_len;
    let segments = |texts: &[String]| -> Vec<TokenSeq> { texts.iter().map(|t| corpus.encode(t).slice(0..window)).collect() };
    let nll_memorized = nll_shift_report(&pretrained, &tuned, &segments(corpus.memorized()))?;
    let nll_held_out = nll_shift_report(&pretrained, &tuned, &segments(corpus.held_out()))?;

    let none = SystemPromptChoice::None;
    let extraction_before = extraction(&pretrained, &corpus, corpus.memorized(), cfg, none)?;
    let mut by_prompt = BTreeMap::new();
    let prompts: &[SystemPromptChoice] = match cfg.mode {
        PairMode::Plain => &[SystemPromptChoice::None],
        PairMode::SystemPrompt => &[SystemPromptChoice::CopyYes, SystemPromptChoice::CopyNo, SystemPromptChoice::None],
    };
    for &p in prompts {
        by_prompt.insert(p, extraction(&tuned, &corpus, corpus.memorized(), cfg, p)?);
    }
    let extraction_after = match cfg.mode {
        PairMode::Plain => by_prompt[&none],
        PairMode::SystemPrompt => by_prompt[&SystemPromptChoice::CopyNo],
    };
    let memorized_ids: BTreeSet<u64> = (0..cfg.num_memorized as u64).collect();
    let report = ToyReport {
        config: cfg.clone(),
        vocab_size: corpus.vocab.id().size,
        detected: detection.segments.len(),
        detected_exact: detection.segments.iter().filter(|s| s.rouge_f == 1.0).count(),
        memorized_detected: detection.segments.iter().filter(|s| memorized_ids.contains(&s.doc_id)).count(),
        pairs: dataset.iter().filter(|p| p.source == PairSource::ParaphrasePair).count(),
        generic_pairs: dataset.iter().filter(|p| p.source == PairSource::GenericPreference).count(),
        extraction_before,
        extraction_after,
        extraction_relative_drop: if extraction_before > 0.0 {
            (extraction_before - extraction_after) / extraction_before
        } else {
            0.0
        },
        held_out_extraction_before: extraction(&pretrained, &corpus, corpus.held_out(), cfg, none)?,
        held_out_extraction_after: extraction(&tuned, &corpus, corpus.held_out(), cfg, none)?,
        extraction_after_by_prompt: by_prompt,
        nll_delta_memorized: mean_delta(&nll_memorized),
        nll_delta_held_out: mean_delta(&nll_held_out),
        epoch_margins: log.epoch_margins(),
        epoch_losses: log.epoch_losses(),
        rejected_increases: increases,
    };
    Ok(ToyRun {
        corpus,
        pretrained,
        tuned,
        dataset,
        log,
        nll_memorized,
        nll_held_out,
        report,
    })
}
