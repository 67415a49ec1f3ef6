//! Exact n-gram membership and counts over a reference corpus.
//!
//! Documents are concatenated with a reserved separator between them and a
//! suffix array is built over the result. Queries never match across a
//! separator because the separator id cannot appear in a valid query.

mod corpus;
mod persist;
mod suffix;

pub use corpus::{load_corpus, CorpusFormat};
pub use persist::{read_index_file, write_index_file, IndexFile, INDEX_FORMAT_VERSION, INDEX_MAGIC};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::{TokenSeq, VocabError, VocabId};

/// Token id placed between documents; never a valid vocabulary id.
pub const SEPARATOR: u32 = u32::MAX;

pub const CI_MIN_N: usize = 5;
pub const CI_MAX_N: usize = 11;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("document {doc} contains the reserved separator token")]
    ReservedToken { doc: usize },
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("invalid n range {n_min}..={n_max}")]
    InvalidRange { n_min: usize, n_max: usize },
    #[error("text too short: {len} tokens, need at least {n_min} for any n-gram order in range")]
    TextTooShort { len: usize, n_min: usize },
    #[error("query gram is empty")]
    EmptyGram,
    #[error("corpus too large for 32-bit positions: {0} tokens")]
    TooLarge(usize),
    #[error("index file: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
}

/// Immutable suffix-array index; `Sync`, so queries can run concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    text: Vec<u32>,
    sa: Vec<u32>,
    doc_bounds: Vec<u32>,
    vocab: VocabId,
}

/// Per-order overlap ratios and the resulting Creativity Index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativityScore {
    pub ci: f64,
    pub per_n: BTreeMap<usize, f64>,
}

impl CorpusIndex {
    pub fn build(vocab: VocabId, docs: &[TokenSeq]) -> Result<Self, IndexError> {
        for doc in docs {
            vocab.ensure_same(doc.vocab_id())?;
        }
        let raw: Vec<&[u32]> = docs.iter().map(TokenSeq::tokens).collect();
        Self::from_raw(vocab, &raw)
    }

    /// Builds from bare token slices, validating ids against `vocab`.
    pub fn from_raw(vocab: VocabId, docs: &[&[u32]]) -> Result<Self, IndexError> {
        let total: usize = docs.iter().map(|d| d.len()).sum::<usize>() + docs.len().saturating_sub(1);
        if total >= u32::MAX as usize {
            return Err(IndexError::TooLarge(total));
        }
        let mut text = Vec::with_capacity(total);
        let mut doc_bounds = Vec::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            if doc.contains(&SEPARATOR) {
                return Err(IndexError::ReservedToken { doc: i });
            }
            TokenSeq::new(doc.to_vec(), vocab.clone())?;
            if i > 0 {
                text.push(SEPARATOR);
            }
            doc_bounds.push(text.len() as u32);
            text.extend_from_slice(doc);
        }
        let sa = suffix::suffix_array(&text);
        Ok(Self {
            text,
            sa,
            doc_bounds,
            vocab,
        })
    }

    pub fn vocab_id(&self) -> &VocabId {
        &self.vocab
    }

    pub fn num_docs(&self) -> usize {
        self.doc_bounds.len()
    }

    /// Total tokens including separators.
    pub fn text_len(&self) -> usize {
        self.text.len()
    }

    pub fn text(&self) -> &[u32] {
        &self.text
    }

    pub fn suffix_array(&self) -> &[u32] {
        &self.sa
    }

    pub fn doc_bounds(&self) -> &[u32] {
        &self.doc_bounds
    }

    pub fn count_ngram(&self, gram: &TokenSeq) -> Result<usize, IndexError> {
        self.vocab.ensure_same(gram.vocab_id())?;
        if gram.is_empty() {
            return Err(IndexError::EmptyGram);
        }
        Ok(self.count_tokens(gram.tokens()))
    }

    /// Occurrence count for raw ids. Empty or separator-bearing grams count 0.
    pub fn count_tokens(&self, gram: &[u32]) -> usize {
        let (lo, hi) = self.range(gram);
        hi - lo
    }

    pub fn contains_tokens(&self, gram: &[u32]) -> bool {
        let (lo, hi) = self.range(gram);
        hi > lo
    }

    /// `(doc index, offset within doc)` of every occurrence, sorted.
    pub fn locate(&self, gram: &[u32]) -> Vec<(usize, usize)> {
        let (lo, hi) = self.range(gram);
        let mut hits: Vec<(usize, usize)> = self.sa[lo..hi]
            .iter()
            .map(|&pos| {
                let doc = self.doc_bounds.partition_point(|&b| b <= pos) - 1;
                (doc, (pos - self.doc_bounds[doc]) as usize)
            })
            .collect();
        hits.sort_unstable();
        hits
    }

    fn range(&self, gram: &[u32]) -> (usize, usize) {
        if gram.is_empty() || gram.contains(&SEPARATOR) {
            return (0, 0);
        }
        let prefix_cmp = |pos: u32| {
            let pos = pos as usize;
            let end = (pos + gram.len()).min(self.text.len());
            self.text[pos..end].cmp(gram)
        };
        let lo = self.sa.partition_point(|&p| prefix_cmp(p) == Ordering::Less);
        let hi = lo + self.sa[lo..].partition_point(|&p| prefix_cmp(p) != Ordering::Greater);
        (lo, hi)
    }

    /// Fraction of the `len - n + 1` n-gram positions of `text` that occur in
    /// the corpus. `None` when the text has no n-gram of that order.
    pub fn ngram_overlap_ratio(&self, text: &TokenSeq, n: usize) -> Result<Option<f64>, IndexError> {
        self.vocab.ensure_same(text.vocab_id())?;
        if n < 1 {
            return Err(IndexError::InvalidOrder(n));
        }
        let tokens = text.tokens();
        if tokens.len() < n {
            return Ok(None);
        }
        let positions = tokens.len() - n + 1;
        let hits = tokens
            .windows(n)
            .filter(|w| self.contains_tokens(w))
            .count();
        Ok(Some(hits as f64 / positions as f64))
    }

    /// Mean n-gram uniqueness `1 - overlap` over orders `n_min..=n_max`
    /// that are defined for this text.
    pub fn creativity_index(
        &self,
        text: &TokenSeq,
        n_min: usize,
        n_max: usize,
    ) -> Result<CreativityScore, IndexError> {
        if n_min < 1 || n_min > n_max {
            return Err(IndexError::InvalidRange { n_min, n_max });
        }
        let mut per_n = BTreeMap::new();
        for n in n_min..=n_max {
            if let Some(r) = self.ngram_overlap_ratio(text, n)? {
                per_n.insert(n, r);
            }
        }
        if per_n.is_empty() {
            return Err(IndexError::TextTooShort {
                len: text.len(),
                n_min,
            });
        }
        let ci = per_n.values().map(|r| 1.0 - r).sum::<f64>() / per_n.len() as f64;
        Ok(CreativityScore { ci, per_n })
    }
}
