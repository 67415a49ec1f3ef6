//! Regurgitation and utility evaluations over any [`WordGenerator`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{CorpusIndex, IndexError, CI_MAX_N, CI_MIN_N};
use crate::lm::{GenerationConfig, LmError, WordGenerator};
use crate::metrics::{
    extraction_ratio, extraction_ratio_recall, rouge_l, MetricError, WordSeq, WordTokenizer, EXTRACTION_THRESHOLD,
    QUOTE_PREFIX_WORDS,
};
use crate::pipeline::{COPY_NO, COPY_YES};
use crate::vocab::Vocab;

/// Instruction used by the system-prompt baseline.
pub const BASELINE_SYSTEM_PROMPT: &str = "Your primary goal is to produce content that is completely original and free from any existing text on the Internet. This means that if someone were to take a few words from your explanation and search for them online, they can not find any matching results.";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("nothing to evaluate: {0}")]
    Empty(String),
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
}

impl EvalError {
    pub fn is_remote(&self) -> bool {
        matches!(self, EvalError::Lm(e) if e.is_remote())
    }
}

/// System prompt placed in front of every evaluation query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemPromptChoice {
    CopyYes,
    CopyNo,
    #[default]
    None,
    Baseline,
}

impl SystemPromptChoice {
    pub const ALL: [SystemPromptChoice; 4] = [Self::CopyYes, Self::CopyNo, Self::None, Self::Baseline];

    pub fn text(self) -> Option<&'static str> {
        match self {
            Self::CopyYes => Some(COPY_YES),
            Self::CopyNo => Some(COPY_NO),
            Self::None => None,
            Self::Baseline => Some(BASELINE_SYSTEM_PROMPT),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CopyYes => "copy-yes",
            Self::CopyNo => "copy-no",
            Self::None => "none",
            Self::Baseline => "baseline",
        }
    }
}

impl fmt::Display for SystemPromptChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemPromptChoice {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| EvalError::Unknown {
                kind: "system prompt",
                value: s.to_string(),
            })
    }
}

/// Prompt and continuation lengths, in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionSpec {
    pub prefix_len: usize,
    pub cont_len: usize,
}

impl ExtractionSpec {
    pub const WEB: Self = Self { prefix_len: 64, cont_len: 32 };
    pub const BOOK: Self = Self { prefix_len: 200, cont_len: 50 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub index: usize,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub spec: ExtractionSpec,
    pub system_prompt: SystemPromptChoice,
    pub generation: GenerationConfig,
    pub examples: Vec<ExampleScore>,
    pub skipped_short: usize,
    pub mean_rouge_f: f64,
    /// Fraction of examples whose ROUGE-L f exceeds 0.5.
    pub extraction_ratio: f64,
    /// The same ratio read from recall instead of f.
    pub extraction_ratio_recall: f64,
}

/// Seed for example `i`, so sampled runs differ per example yet replay exactly.
fn example_cfg(cfg: &GenerationConfig, max_tokens: usize, i: usize) -> GenerationConfig {
    GenerationConfig {
        max_tokens,
        seed: cfg.seed.wrapping_add(i as u64),
        ..*cfg
    }
}

/// Prompts with each snippet's first `prefix_len` words and scores the
/// continuation against the next `cont_len`. Shorter snippets are skipped.
pub fn eval_extraction<G: WordGenerator + ?Sized>(
    gen: &G,
    snippets: &[WordSeq],
    spec: ExtractionSpec,
    system_prompt: SystemPromptChoice,
    cfg: &GenerationConfig,
) -> Result<ExtractionReport, EvalError> {
    let window = spec.prefix_len + spec.cont_len;
    let usable: Vec<(usize, &WordSeq)> = snippets.iter().enumerate().filter(|(_, s)| s.len() >= window).collect();
    if usable.is_empty() {
        return Err(EvalError::Empty(format!(
            "{} snippets, none with at least {window} words",
            snippets.len()
        )));
    }
    let examples: Vec<ExampleScore> = usable
        .par_iter()
        .map(|&(i, s)| {
            let words = s.words();
            let out = gen.continue_words(
                system_prompt.text(),
                &words[..spec.prefix_len],
                &example_cfg(cfg, spec.cont_len, i),
            )?;
            let score = rouge_l(&WordSeq::from_words(out), &WordSeq::from_words(words[spec.prefix_len..window].to_vec()));
            Ok(ExampleScore {
                index: i,
                precision: score.precision,
                recall: score.recall,
                f: score.f,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    let scores: Vec<_> = examples
        .iter()
        .map(|e| crate::metrics::RougeScore {
            precision: e.precision,
            recall: e.recall,
            f: e.f,
        })
        .collect();
    Ok(ExtractionReport {
        spec,
        system_prompt,
        generation: *cfg,
        skipped_short: snippets.len() - examples.len(),
        mean_rouge_f: scores.iter().map(|s| s.f).sum::<f64>() / scores.len() as f64,
        extraction_ratio: extraction_ratio(&scores, EXTRACTION_THRESHOLD)?,
        extraction_ratio_recall: extraction_ratio_recall(&scores, EXTRACTION_THRESHOLD)?,
        examples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativityExample {
    pub index: usize,
    pub words: usize,
    /// Absent when the output is shorter than the smallest n.
    pub ci: Option<f64>,
    /// n-gram overlap ratio per order.
    pub overlap: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativityReport {
    pub system_prompt: SystemPromptChoice,
    pub generation: GenerationConfig,
    pub examples: Vec<CreativityExample>,
    pub ci_mean: Option<f64>,
    /// Mean overlap per order over the outputs where that order is defined.
    pub overlap_mean: BTreeMap<usize, f64>,
    /// The 11-gram overlap ratio, used as the regurgitation score.
    pub overlap_11_mean: Option<f64>,
    pub too_short: usize,
}

/// Samples a continuation for every prompt and measures how much of it
/// occurs verbatim in the indexed corpus.
pub fn eval_creativity<G: WordGenerator + ?Sized>(
    gen: &G,
    prompts: &[String],
    index: &CorpusIndex,
    vocab: &Vocab,
    tokenizer: &WordTokenizer,
    system_prompt: SystemPromptChoice,
    cfg: &GenerationConfig,
) -> Result<CreativityReport, EvalError> {
    if prompts.is_empty() {
        return Err(EvalError::Empty("no creative-writing prompts".into()));
    }
    let examples: Vec<CreativityExample> = prompts
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let prompt = tokenizer.tokenize(p).into_words();
            let out = gen.continue_words(system_prompt.text(), &prompt, &example_cfg(cfg, cfg.max_tokens, i))?;
            let seq = vocab.encode_words(&out);
            let (ci, overlap) = match index.creativity_index(&seq, CI_MIN_N, CI_MAX_N) {
                Ok(score) => (Some(score.ci), score.per_n),
                Err(IndexError::TextTooShort { .. }) => (None, BTreeMap::new()),
                Err(e) => return Err(e.into()),
            };
            Ok(CreativityExample {
                index: i,
                words: out.len(),
                ci,
                overlap,
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let cis: Vec<f64> = examples.iter().filter_map(|e| e.ci).collect();
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for e in &examples {
        for (&n, &r) in &e.overlap {
            let slot = sums.entry(n).or_default();
            slot.0 += r;
            slot.1 += 1;
        }
    }
    let overlap_mean: BTreeMap<usize, f64> = sums.into_iter().map(|(n, (s, c))| (n, s / c as f64)).collect();
    Ok(CreativityReport {
        system_prompt,
        generation: *cfg,
        ci_mean: (!cis.is_empty()).then(|| cis.iter().sum::<f64>() / cis.len() as f64),
        overlap_11_mean: overlap_mean.get(&11).copied(),
        overlap_mean,
        too_short: examples.len() - cis.len(),
        examples,
    })
}

/// How a title and author are turned into a quotation request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuoteTemplate {
    FirstWords,
    Poem,
}

impl QuoteTemplate {
    pub fn render(self, title: &str, author: &str) -> String {
        match self {
            Self::FirstWords => format!("Provide the first 100 words of {title} by {author}"),
            Self::Poem => format!("Provide the poem {title} by {author}"),
        }
    }
}

impl FromStr for QuoteTemplate {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first-words" => Ok(Self::FirstWords),
            "poem" => Ok(Self::Poem),
            _ => Err(EvalError::Unknown {
                kind: "quote template",
                value: s.to_string(),
            }),
        }
    }
}

/// A public-domain text the model should be able to quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteItem {
    pub title: String,
    pub author: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteExample {
    pub index: usize,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteReport {
    pub template: QuoteTemplate,
    pub system_prompt: SystemPromptChoice,
    pub generation: GenerationConfig,
    pub examples: Vec<QuoteExample>,
    /// Fraction of items whose first 50 words are reproduced with ROUGE-L
    /// f above 0.5.
    pub quotation_recall: f64,
}

pub fn eval_quote<G: WordGenerator + ?Sized>(
    gen: &G,
    items: &[QuoteItem],
    template: QuoteTemplate,
    tokenizer: &WordTokenizer,
    system_prompt: SystemPromptChoice,
    cfg: &GenerationConfig,
) -> Result<QuoteReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::Empty("no quotation items".into()));
    }
    let outputs: Vec<WordSeq> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let prompt = tokenizer.tokenize(&template.render(&item.title, &item.author)).into_words();
            let out = gen.continue_words(system_prompt.text(), &prompt, &example_cfg(cfg, cfg.max_tokens, i))?;
            Ok(WordSeq::from_words(out))
        })
        .collect::<Result<_, EvalError>>()?;
    let refs: Vec<WordSeq> = items.iter().map(|it| tokenizer.tokenize(&it.text)).collect();
    let examples = outputs
        .iter()
        .zip(&refs)
        .enumerate()
        .map(|(index, (o, r))| QuoteExample {
            index,
            f: rouge_l(&o.truncated(QUOTE_PREFIX_WORDS), &r.truncated(QUOTE_PREFIX_WORDS)).f,
        })
        .collect();
    Ok(QuoteReport {
        template,
        system_prompt,
        generation: *cfg,
        examples,
        quotation_recall: crate::metrics::quotation_recall(&outputs, &refs, QUOTE_PREFIX_WORDS)?,
    })
}
