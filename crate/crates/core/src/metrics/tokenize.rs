use serde::{Deserialize, Serialize};

/// Deterministic word splitter.
///
/// Text is split on Unicode whitespace; within each chunk, leading and
/// trailing non-alphanumeric characters become one-character tokens of
/// their own, and the interior is kept whole (`don't`, `3.14`, `e-mail`).
///
/// ```
/// use copyguard::metrics::WordTokenizer;
/// let words = WordTokenizer::default().tokenize("\"Hello,  World!\"");
/// assert_eq!(words.words(), ["\"", "hello", ",", "world", "!", "\""]);
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTokenizer {
    pub lowercase: bool,
}

impl Default for WordTokenizer {
    fn default() -> Self {
        Self { lowercase: true }
    }
}

impl WordTokenizer {
    pub fn tokenize(&self, text: &str) -> WordSeq {
        let mut words = Vec::new();
        for chunk in text.split_whitespace() {
            let chars: Vec<char> = chunk.chars().collect();
            let start = chars
                .iter()
                .position(|c| c.is_alphanumeric())
                .unwrap_or(chars.len());
            let end = chars
                .iter()
                .rposition(|c| c.is_alphanumeric())
                .map_or(start, |e| e + 1);
            for c in &chars[..start] {
                words.push(c.to_string());
            }
            if start < end {
                let core: String = chars[start..end].iter().collect();
                words.push(if self.lowercase {
                    core.to_lowercase()
                } else {
                    core
                });
            }
            for c in &chars[end.max(start)..] {
                words.push(c.to_string());
            }
        }
        WordSeq { words }
    }
}

/// Output of [`WordTokenizer`]; never contains empty strings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSeq {
    words: Vec<String>,
}

impl WordSeq {
    /// Wraps pre-split words, dropping empty strings.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            words: words
                .into_iter()
                .map(Into::into)
                .filter(|w: &String| !w.is_empty())
                .collect(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn into_words(self) -> Vec<String> {
        self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn truncated(&self, n: usize) -> WordSeq {
        WordSeq {
            words: self.words.iter().take(n).cloned().collect(),
        }
    }

    pub fn join(&self) -> String {
        self.words.join(" ")
    }
}
