//! Token sequences and the word-level vocabulary that produces them.
//!
//! Ids `0..RESERVED` are reserved: the start-of-sequence pad, the unknown
//! word, and the two markers that delimit a system prompt at the head of a
//! model context. Every other id maps one-to-one to a word produced by
//! [`WordTokenizer`](crate::metrics::WordTokenizer), so decoding a sequence
//! and re-encoding the words yields the same ids.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::WordTokenizer;

pub const BOS: u32 = 0;
pub const UNK: u32 = 1;
pub const SYS_OPEN: u32 = 2;
pub const SYS_CLOSE: u32 = 3;
pub const RESERVED: u32 = 4;

const RESERVED_WORDS: [&str; RESERVED as usize] = ["<s>", "<unk>", "<sys>", "</sys>"];

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("token id {token} at position {position} is out of range for vocabulary `{vocab}` of size {size}")]
    OutOfRange {
        token: u32,
        position: usize,
        vocab: String,
        size: u32,
    },
    #[error("vocabulary mismatch: expected `{expected}`, got `{found}`")]
    Mismatch { expected: VocabId, found: VocabId },
    #[error("duplicate word `{0}` in vocabulary")]
    DuplicateWord(String),
}

/// Identifies the vocabulary a [`TokenSeq`] was produced by.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VocabId {
    pub name: String,
    pub size: u32,
}

impl VocabId {
    pub fn new(name: impl Into<String>, size: u32) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }

    pub fn ensure_same(&self, other: &VocabId) -> Result<(), VocabError> {
        if self == other {
            Ok(())
        } else {
            Err(VocabError::Mismatch {
                expected: self.clone(),
                found: other.clone(),
            })
        }
    }
}

impl fmt::Display for VocabId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.name, self.size)
    }
}

/// Tokenized text tagged with the vocabulary it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<u32>,
    vocab: VocabId,
}

impl TokenSeq {
    pub fn new(tokens: Vec<u32>, vocab: VocabId) -> Result<Self, VocabError> {
        if let Some((position, &token)) = tokens
            .iter()
            .enumerate()
            .find(|(_, &t)| t >= vocab.size)
        {
            return Err(VocabError::OutOfRange {
                token,
                position,
                vocab: vocab.name.clone(),
                size: vocab.size,
            });
        }
        Ok(Self { tokens, vocab })
    }

    pub fn empty(vocab: VocabId) -> Self {
        Self {
            tokens: Vec::new(),
            vocab,
        }
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn vocab_id(&self) -> &VocabId {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Sub-range sharing this sequence's vocabulary. Panics like slice indexing.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TokenSeq {
        TokenSeq {
            tokens: self.tokens[range].to_vec(),
            vocab: self.vocab.clone(),
        }
    }

    pub fn concat(&self, other: &TokenSeq) -> Result<TokenSeq, VocabError> {
        self.vocab.ensure_same(&other.vocab)?;
        let mut tokens = self.tokens.clone();
        tokens.extend_from_slice(&other.tokens);
        Ok(TokenSeq {
            tokens,
            vocab: self.vocab.clone(),
        })
    }

    pub fn into_tokens(self) -> Vec<u32> {
        self.tokens
    }
}

/// Word-level vocabulary with the reserved ids in front.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    name: String,
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    /// Builds a vocabulary from an explicit word list (reserved entries are
    /// prepended). Word order is preserved.
    pub fn from_words<I, S>(name: impl Into<String>, words: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all: Vec<String> = RESERVED_WORDS.iter().map(|w| w.to_string()).collect();
        let mut ids: HashMap<String, u32> = all
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        for word in words {
            let word = word.into();
            if ids.contains_key(&word) {
                return Err(VocabError::DuplicateWord(word));
            }
            ids.insert(word.clone(), all.len() as u32);
            all.push(word);
        }
        Ok(Self {
            name: name.into(),
            words: all,
            ids,
        })
    }

    /// Collects every distinct word of `texts` (plus `extra`) in sorted order,
    /// so the result does not depend on document order.
    pub fn build<'a, I>(
        name: impl Into<String>,
        tokenizer: &WordTokenizer,
        texts: I,
        extra: &[&str],
    ) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut set = std::collections::BTreeSet::new();
        for text in texts {
            set.extend(tokenizer.tokenize(text).into_words());
        }
        for text in extra {
            set.extend(tokenizer.tokenize(text).into_words());
        }
        for reserved in RESERVED_WORDS {
            set.remove(reserved);
        }
        Self::from_words(name, set).expect("set entries are unique")
    }

    pub fn id(&self) -> VocabId {
        VocabId::new(self.name.clone(), self.words.len() as u32)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn lookup(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn encode_words<S: AsRef<str>>(&self, words: &[S]) -> TokenSeq {
        let tokens = words.iter().map(|w| self.lookup(w.as_ref())).collect();
        TokenSeq {
            tokens,
            vocab: self.id(),
        }
    }

    pub fn encode(&self, tokenizer: &WordTokenizer, text: &str) -> TokenSeq {
        self.encode_words(tokenizer.tokenize(text).words())
    }

    pub fn decode_words(&self, tokens: &[u32]) -> Vec<String> {
        tokens
            .iter()
            .map(|&t| self.word(t).unwrap_or("<unk>").to_string())
            .collect()
    }

    pub fn decode(&self, tokens: &[u32]) -> String {
        self.decode_words(tokens).join(" ")
    }

    /// `<sys> words… </sys>`, the context prefix a system prompt becomes.
    pub fn encode_system_prompt(&self, tokenizer: &WordTokenizer, prompt: &str) -> TokenSeq {
        let mut tokens = vec![SYS_OPEN];
        tokens.extend(self.encode(tokenizer, prompt).into_tokens());
        tokens.push(SYS_CLOSE);
        TokenSeq {
            tokens,
            vocab: self.id(),
        }
    }
}

/// Word table written after a vocab header: a `u32` count (0 = absent)
/// followed by the non-reserved words in id order.
pub(crate) fn write_word_table<W: std::io::Write>(w: &mut W, vocab: Option<&Vocab>) -> std::io::Result<()> {
    match vocab {
        Some(v) => {
            let words = &v.words()[RESERVED as usize..];
            crate::codec::put_u32(w, words.len() as u32)?;
            for word in words {
                crate::codec::put_str(w, word)?;
            }
            Ok(())
        }
        None => crate::codec::put_u32(w, 0),
    }
}

pub(crate) fn read_word_table<R: std::io::Read>(r: &mut R, id: &VocabId) -> std::io::Result<Option<Vocab>> {
    let invalid = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
    let count = crate::codec::get_u32(r)?;
    if count == 0 {
        return Ok(None);
    }
    let mut words = Vec::with_capacity(count as usize);
    for _ in 0..count {
        words.push(crate::codec::get_str(r)?);
    }
    let v = Vocab::from_words(id.name.clone(), words).map_err(|e| invalid(e.to_string()))?;
    if v.id() != *id {
        return Err(invalid(format!("word table describes {} but header says {}", v.id(), id)));
    }
    Ok(Some(v))
}
