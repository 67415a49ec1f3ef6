//! Word-level ROUGE-L and the regurgitation scores built on it.
//!
//! ROUGE-L here is the geometric mean of LCS precision and recall, not the
//! usual F-measure.

mod tokenize;

pub use tokenize::{WordSeq, WordTokenizer};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Threshold a ROUGE-L score must strictly exceed to count as reproduced.
pub const EXTRACTION_THRESHOLD: f64 = 0.5;

/// Words of output and reference compared for quotation recall.
pub const QUOTE_PREFIX_WORDS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("cannot compute a ratio over an empty list of scores")]
    Empty,
    #[error("length mismatch: {outputs} outputs vs {references} references")]
    LengthMismatch { outputs: usize, references: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Length of the longest common subsequence, two-row dynamic program.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L over arbitrary token slices (words or token ids).
pub fn rouge_l_tokens<T: PartialEq>(hypothesis: &[T], reference: &[T]) -> RougeScore {
    let lcs = lcs_len(hypothesis, reference) as f64;
    let precision = if hypothesis.is_empty() {
        0.0
    } else {
        lcs / hypothesis.len() as f64
    };
    let recall = if reference.is_empty() {
        0.0
    } else {
        lcs / reference.len() as f64
    };
    RougeScore {
        precision,
        recall,
        f: (precision * recall).sqrt(),
    }
}

pub fn rouge_l(hypothesis: &WordSeq, reference: &WordSeq) -> RougeScore {
    rouge_l_tokens(hypothesis.words(), reference.words())
}

/// Fraction of scores whose `f` strictly exceeds `threshold`.
pub fn extraction_ratio(scores: &[RougeScore], threshold: f64) -> Result<f64, MetricError> {
    ratio_above(scores.iter().map(|s| s.f), threshold)
}

/// Same as [`extraction_ratio`] but reading recall, the reference-normalized
/// form of verbatim overlap.
pub fn extraction_ratio_recall(scores: &[RougeScore], threshold: f64) -> Result<f64, MetricError> {
    ratio_above(scores.iter().map(|s| s.recall), threshold)
}

fn ratio_above(values: impl ExactSizeIterator<Item = f64>, threshold: f64) -> Result<f64, MetricError> {
    let n = values.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let hits = values.filter(|&v| v > threshold).count();
    Ok(hits as f64 / n as f64)
}

/// Truncates both sides to `prefix_words` and reports the fraction whose
/// ROUGE-L exceeds 0.5.
pub fn quotation_recall(
    outputs: &[WordSeq],
    references: &[WordSeq],
    prefix_words: usize,
) -> Result<f64, MetricError> {
    if outputs.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            outputs: outputs.len(),
            references: references.len(),
        });
    }
    let scores: Vec<RougeScore> = outputs
        .iter()
        .zip(references)
        .map(|(o, r)| rouge_l(&o.truncated(prefix_words), &r.truncated(prefix_words)))
        .collect();
    extraction_ratio(&scores, EXTRACTION_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ws(text: &str) -> WordSeq {
        WordTokenizer::default().tokenize(text)
    }

    /// Exhaustive LCS: try every subsequence of the shorter side.
    fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let sub: Vec<u8> = (0..short.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| short[i])
                .collect();
            let mut it = long.iter();
            if sub.iter().all(|c| it.any(|d| d == c)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    #[test]
    fn identical_sequences_score_one() {
        let s = rouge_l(&ws("a b c d"), &ws("a b c d"));
        assert_eq!(s, RougeScore { precision: 1.0, recall: 1.0, f: 1.0 });
    }

    #[test]
    fn one_substitution_in_four() {
        assert_eq!(brute_lcs(b"abxd", b"abcd"), 3);
        let s = rouge_l(&ws("a b x d"), &ws("a b c d"));
        assert_eq!((s.precision, s.recall, s.f), (0.75, 0.75, 0.75));
    }

    #[test]
    fn disjoint_and_empty() {
        assert_eq!(rouge_l(&ws("x y"), &ws("a b")).f, 0.0);
        let s = rouge_l(&ws(""), &ws("a b"));
        assert_eq!((s.precision, s.recall, s.f), (0.0, 0.0, 0.0));
        assert_eq!(rouge_l(&ws(""), &ws("")).f, 0.0);
    }

    #[test]
    fn extraction_ratio_is_strict() {
        let f = |f| RougeScore { precision: f, recall: f, f };
        assert_eq!(extraction_ratio(&[f(1.0), f(1.0)], 0.5).unwrap(), 1.0);
        assert_eq!(extraction_ratio(&[f(0.4), f(0.6)], 0.5).unwrap(), 0.5);
        assert_eq!(extraction_ratio(&[f(0.5)], 0.5).unwrap(), 0.0);
        assert_eq!(extraction_ratio(&[], 0.5), Err(MetricError::Empty));
    }

    #[test]
    fn recall_variant_reads_recall() {
        let s = RougeScore { precision: 0.2, recall: 0.9, f: (0.18f64).sqrt() };
        assert_eq!(extraction_ratio(&[s], 0.5).unwrap(), 0.0);
        assert_eq!(extraction_ratio_recall(&[s], 0.5).unwrap(), 1.0);
    }

    #[test]
    fn quotation_recall_cases() {
        let refs = vec![ws("one two three four"), ws("five six seven eight")];
        assert_eq!(quotation_recall(&refs, &refs, 50).unwrap(), 1.0);
        let empty = vec![WordSeq::default(), WordSeq::default()];
        assert_eq!(quotation_recall(&empty, &refs, 50).unwrap(), 0.0);
        // first output matches, second shares one word of four: f = 0.25
        let outs = vec![ws("one two three four"), ws("five x y z")];
        assert_eq!(brute_lcs(b"5xyz", b"5678"), 1);
        assert_eq!(quotation_recall(&outs, &refs, 50).unwrap(), 0.5);
        assert_eq!(
            quotation_recall(&outs[..1], &refs, 50),
            Err(MetricError::LengthMismatch { outputs: 1, references: 2 })
        );
    }

    #[test]
    fn quotation_recall_truncates_before_scoring() {
        // Identical first two words, garbage afterwards.
        let out = vec![ws("alpha beta q r s t u v")];
        let reference = vec![ws("alpha beta c d e f g h")];
        assert_eq!(quotation_recall(&out, &reference, 2).unwrap(), 1.0);
        assert_eq!(quotation_recall(&out, &reference, 8).unwrap(), 0.0);
    }

    #[test]
    fn dp_matches_exhaustive_small_alphabet() {
        // every pair of length <= 5 over {0,1,2}; the acceptance suite covers 8
        let mut all: Vec<Vec<u8>> = vec![vec![]];
        let mut frontier = all.clone();
        for _ in 0..5 {
            frontier = frontier
                .iter()
                .flat_map(|s| (0..3u8).map(move |c| [s.as_slice(), &[c]].concat()))
                .collect();
            all.extend(frontier.iter().cloned());
        }
        for a in &all {
            for b in all.iter().step_by(7) {
                assert_eq!(lcs_len(a, b), brute_lcs(a, b), "{a:?} {b:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn lcs_is_symmetric_and_bounded(a in prop::collection::vec(0u8..4, 0..20),
                                         b in prop::collection::vec(0u8..4, 0..20)) {
            let l = lcs_len(&a, &b);
            prop_assert_eq!(l, lcs_len(&b, &a));
            prop_assert!(l <= a.len().min(b.len()));
            let ab = rouge_l_tokens(&a, &b);
            let ba = rouge_l_tokens(&b, &a);
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
            prop_assert_eq!(ab.f, ba.f);
            prop_assert_eq!(ab.f == 1.0, a == b && !a.is_empty());
        }

        #[test]
        fn extraction_ratio_non_increasing_in_threshold(fs in prop::collection::vec(0.0f64..=1.0, 1..30),
                                                         t1 in 0.0f64..1.0, dt in 0.0f64..1.0) {
            let scores: Vec<RougeScore> = fs.iter().map(|&f| RougeScore { precision: f, recall: f, f }).collect();
            let lo = extraction_ratio(&scores, t1).unwrap();
            let hi = extraction_ratio(&scores, t1 + dt).unwrap();
            prop_assert!(hi <= lo);
        }
    }
}
