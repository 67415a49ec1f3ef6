use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::lm::{generate, GenerationConfig, LanguageModel};
use crate::metrics::rouge_l_tokens;
use crate::vocab::{TokenSeq, Vocab};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub prefix_len: usize,
    pub cont_len: usize,
    pub top_k: usize,
    /// Segments scoring at or below this ROUGE-L f are dropped before top-k.
    pub min_rouge: Option<f64>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            prefix_len: 64,
            cont_len: 32,
            top_k: 16_000,
            min_rouge: Some(0.5),
        }
    }
}

/// The first `prefix_len + cont_len` tokens of a document, with the model's
/// greedy continuation of the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorizedSegment {
    pub doc_id: u64,
    pub segment: TokenSeq,
    pub prefix: TokenSeq,
    pub continuation_ref: TokenSeq,
    pub model_continuation: TokenSeq,
    pub rouge_f: f64,
}

impl MemorizedSegment {
    pub fn to_record(&self, vocab: &Vocab) -> SegmentRecord {
        SegmentRecord {
            doc_id: self.doc_id,
            rouge_f: self.rouge_f,
            text: vocab.decode(self.segment.tokens()),
            prefix: vocab.decode(self.prefix.tokens()),
            continuation_ref: vocab.decode(self.continuation_ref.tokens()),
            model_continuation: vocab.decode(self.model_continuation.tokens()),
        }
    }
}

/// Text form of a [`MemorizedSegment`], one JSONL line each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub doc_id: u64,
    pub rouge_f: f64,
    pub text: String,
    pub prefix: String,
    pub continuation_ref: String,
    pub model_continuation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocFailure {
    pub doc_id: u64,
    pub message: String,
    /// The failure came from a remote endpoint.
    pub remote: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Sorted by `rouge_f` descending, ties by `doc_id` ascending.
    pub segments: Vec<MemorizedSegment>,
    pub skipped_short: usize,
    pub failures: Vec<DocFailure>,
}

/// Prompts the model with each document's opening `prefix_len` tokens and
/// scores its greedy continuation against the true next `cont_len` tokens.
///
/// Documents shorter than the window are counted and skipped. Per-document
/// model errors are recorded; more than half of the attempted documents
/// failing aborts the run.
pub fn detect_memorized<M: LanguageModel + ?Sized>(
    model: &M,
    docs: &[(u64, TokenSeq)],
    cfg: &DetectConfig,
) -> Result<Detection, PipelineError> {
    let window = cfg.prefix_len + cfg.cont_len;
    let gen_cfg = GenerationConfig::greedy(cfg.cont_len);
    let eligible: Vec<&(u64, TokenSeq)> = docs.iter().filter(|(_, d)| d.len() >= window).collect();
    let skipped_short = docs.len() - eligible.len();
    if skipped_short > 0 {
        log::info!("skipped {skipped_short} documents shorter than {window} tokens");
    }

    let results: Vec<Result<MemorizedSegment, DocFailure>> = eligible
        .par_iter()
        .map(|(doc_id, doc)| {
            let prefix = doc.slice(0..cfg.prefix_len);
            let continuation_ref = doc.slice(cfg.prefix_len..window);
            let model_continuation = generate(model, &prefix, &gen_cfg).map_err(|e| DocFailure {
                doc_id: *doc_id,
                message: e.to_string(),
                remote: e.is_remote(),
            })?;
            let rouge_f = rouge_l_tokens(model_continuation.tokens(), continuation_ref.tokens()).f;
            Ok(MemorizedSegment {
                doc_id: *doc_id,
                segment: doc.slice(0..window),
                prefix,
                continuation_ref,
                model_continuation,
                rouge_f,
            })
        })
        .collect();

    let mut segments = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => segments.push(s),
            Err(f) => {
                log::warn!("document {} failed: {}", f.doc_id, f.message);
                failures.push(f);
            }
        }
    }
    if !eligible.is_empty() && failures.len() * 2 > eligible.len() {
        return Err(PipelineError::TooManyFailures {
            failed: failures.len(),
            attempted: eligible.len(),
            first: failures[0].message.clone(),
            remote: failures.iter().any(|f| f.remote),
        });
    }

    if let Some(min) = cfg.min_rouge {
        segments.retain(|s| s.rouge_f > min);
    }
    segments.sort_by(|a, b| b.rouge_f.total_cmp(&a.rouge_f).then(a.doc_id.cmp(&b.doc_id)));
    segments.truncate(cfg.top_k);
    Ok(Detection {
        segments,
        skipped_short,
        failures,
    })
}
