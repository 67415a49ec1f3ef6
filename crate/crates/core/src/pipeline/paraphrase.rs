use std::collections::BTreeMap;

use rayon::prelude::*;

use super::PipelineError;
use crate::lm::{GenerationConfig, LmError, TextGenerator};

/// Rewrite instruction sent to the paraphrasing model; `{text}` is replaced
/// by the segment.
pub const PARAPHRASE_PROMPT: &str = "Your task is to rewrite the given text or code, maintaining the same meaning while using different words. Follow these guidelines:
- Preserve the original length as closely as possible.
- Ensure the rewritten version is clear and grammatically (and syntactically) correct.

The text to rewrite is enclosed below:
---
{text}
---
Please provide only the rewritten version without any additional comments or explanations.";

const TEXT_SLOT: &str = "{text}";

pub fn render_paraphrase_prompt(text: &str) -> String {
    PARAPHRASE_PROMPT.replacen(TEXT_SLOT, text, 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paraphrase {
    pub text: String,
    /// The reply equals the input; kept, but worth a look.
    pub identical: bool,
}

pub fn paraphrase(
    client: &(impl TextGenerator + ?Sized),
    segment: &str,
    cfg: &GenerationConfig,
) -> Result<Paraphrase, PipelineError> {
    let segment = segment.trim();
    if segment.is_empty() {
        return Err(PipelineError::EmptySegment);
    }
    let reply = client.complete(&render_paraphrase_prompt(segment), cfg)?;
    let text = reply.trim().to_string();
    if text.is_empty() {
        return Err(PipelineError::EmptyReply);
    }
    let identical = text == segment;
    if identical {
        log::warn!("paraphrase is identical to its input: {:?}", truncate_for_log(segment));
    }
    Ok(Paraphrase { text, identical })
}

/// Paraphrases every segment in parallel; segment `i` is sampled with seed
/// `cfg.seed + i` and a token budget of twice its word count plus 16.
pub fn paraphrase_all(
    client: &(impl TextGenerator + ?Sized),
    segments: &[String],
    cfg: &GenerationConfig,
) -> Vec<Result<Paraphrase, PipelineError>> {
    segments
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let words = s.split_whitespace().count();
            let cfg = GenerationConfig {
                max_tokens: 2 * words + 16,
                seed: cfg.seed.wrapping_add(i as u64),
                ..*cfg
            };
            paraphrase(client, s, &cfg)
        })
        .collect()
}

fn truncate_for_log(s: &str) -> String {
    s.chars().take(80).collect()
}

/// Offline paraphraser: swaps words through a synonym table, keeping
/// punctuation and capitalization. When no word has a synonym it swaps the
/// first pair of adjacent distinct words, so the output always differs from
/// the input while keeping its length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StubParaphraser {
    synonyms: BTreeMap<String, String>,
}

const ENGLISH_SYNONYMS: &[(&str, &str)] = &[
    ("quick", "fast"),
    ("fast", "quick"),
    ("brown", "tan"),
    ("lazy", "idle"),
    ("jumps", "leaps"),
    ("jumped", "leapt"),
    ("big", "large"),
    ("large", "big"),
    ("small", "little"),
    ("little", "small"),
    ("begin", "start"),
    ("start", "begin"),
    ("said", "stated"),
    ("old", "aged"),
    ("happy", "glad"),
    ("sad", "unhappy"),
    ("house", "home"),
    ("home", "house"),
    ("road", "street"),
    ("street", "road"),
    ("see", "observe"),
    ("saw", "noticed"),
    ("look", "glance"),
    ("walk", "stroll"),
    ("walked", "strolled"),
    ("child", "kid"),
    ("children", "kids"),
    ("man", "fellow"),
    ("woman", "lady"),
    ("often", "frequently"),
    ("many", "numerous"),
    ("very", "really"),
    ("good", "fine"),
    ("bad", "poor"),
    ("near", "close"),
    ("end", "finish"),
    ("help", "assist"),
    ("buy", "purchase"),
    ("show", "display"),
    ("answer", "reply"),
    ("ask", "inquire"),
    ("car", "automobile"),
    ("city", "town"),
    ("world", "globe"),
    ("story", "tale"),
    ("make", "create"),
    ("made", "created"),
    ("use", "employ"),
    ("used", "employed"),
    ("important", "significant"),
    ("difficult", "hard"),
    ("easy", "simple"),
    ("night", "evening"),
    ("quiet", "silent"),
    ("loud", "noisy"),
];

impl StubParaphraser {
    pub fn new(synonyms: BTreeMap<String, String>) -> Self {
        Self { synonyms }
    }

    /// A small built-in table of common English words.
    pub fn english() -> Self {
        Self::new(
            ENGLISH_SYNONYMS
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    /// Rewrites `text` directly.
    pub fn rewrite(&self, text: &str) -> String {
        let mut words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let mut changed = false;
        for w in words.iter_mut() {
            if let Some(sub) = self.substitute(w) {
                *w = sub;
                changed = true;
            }
        }
        if !changed {
            if let Some(i) = (1..words.len()).find(|&i| words[i - 1] != words[i]) {
                words.swap(i - 1, i);
            } else if let Some(first) = words.first_mut() {
                *first = if first.as_str() == "indeed" { "truly".into() } else { "indeed".into() };
            }
        }
        words.join(" ")
    }

    fn substitute(&self, word: &str) -> Option<String> {
        let start = word.find(|c: char| c.is_alphanumeric())?;
        let end = word
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_alphanumeric())
            .map(|(i, c)| i + c.len_utf8())?;
        let core = &word[start..end];
        let lower = core.to_lowercase();
        let sub = self.synonyms.get(&lower)?;
        let sub = if core.chars().next().is_some_and(char::is_uppercase) {
            let mut c = sub.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        } else {
            sub.clone()
        };
        Some(format!("{}{}{}", &word[..start], sub, &word[end..]))
    }
}

/// Pulls the segment back out of a rendered rewrite prompt; other prompts are
/// taken whole.
fn extract_segment(prompt: &str) -> &str {
    let lines: Vec<&str> = prompt.split('\n').collect();
    let open = lines.iter().position(|l| *l == "---");
    let close = lines.iter().rposition(|l| *l == "---");
    match (open, close) {
        (Some(a), Some(b)) if b > a => {
            let start: usize = lines[..=a].iter().map(|l| l.len() + 1).sum();
            let end: usize = lines[..b].iter().map(|l| l.len() + 1).sum::<usize>() - 1;
            &prompt[start..end.max(start)]
        }
        _ => prompt,
    }
}

impl TextGenerator for StubParaphraser {
    fn complete(&self, prompt: &str, _cfg: &GenerationConfig) -> Result<String, LmError> {
        Ok(self.rewrite(extract_segment(prompt)))
    }
}
