use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jsonl::read_jsonl;
use super::{PipelineError, SegmentRecord};

pub const COPY_YES: &str = "Copying: Yes";
pub const COPY_NO: &str = "Copying: No";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    ParaphrasePair,
    GenericPreference,
}

/// One preference record. Serialized field order is fixed so datasets diff
/// cleanly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
    pub chosen: String,
    pub rejected: String,
    pub source: PairSource,
    #[serde(default)]
    pub origin_doc_id: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Paraphrase preferred over the original.
    Plain,
    /// Half the pairs, chosen at random, ask for copying and prefer the
    /// original; the rest forbid it and prefer the paraphrase.
    SystemPrompt,
}

pub fn build_pairs(
    segments: &[SegmentRecord],
    paraphrases: &[String],
    mode: PairMode,
    seed: u64,
) -> Result<Vec<PreferencePair>, PipelineError> {
    if segments.len() != paraphrases.len() {
        return Err(PipelineError::LengthMismatch {
            segments: segments.len(),
            paraphrases: paraphrases.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(segments
        .iter()
        .zip(paraphrases)
        .map(|(seg, para)| {
            let allow_copy = mode == PairMode::SystemPrompt && rng.random_bool(0.5);
            let (chosen, rejected) = if allow_copy {
                (seg.text.clone(), para.clone())
            } else {
                (para.clone(), seg.text.clone())
            };
            let system_prompt = match mode {
                PairMode::Plain => None,
                PairMode::SystemPrompt => Some(if allow_copy { COPY_YES } else { COPY_NO }.to_string()),
            };
            PreferencePair {
                system_prompt,
                chosen,
                rejected,
                source: PairSource::ParaphrasePair,
                origin_doc_id: Some(seg.doc_id),
            }
        })
        .collect())
}

#[derive(Deserialize)]
struct GenericRecord {
    chosen: String,
    rejected: String,
}

/// Reads `{chosen, rejected}` lines as generic preference pairs.
pub fn generic_pairs<R: BufRead>(r: R) -> Result<Vec<PreferencePair>, PipelineError> {
    let records: Vec<GenericRecord> = read_jsonl(r)?;
    Ok(records
        .into_iter()
        .map(|g| PreferencePair {
            system_prompt: None,
            chosen: g.chosen,
            rejected: g.rejected,
            source: PairSource::GenericPreference,
            origin_doc_id: None,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub paraphrase_fraction: f64,
    pub seed: u64,
}

impl MixtureSpec {
    /// Generic pairs needed alongside `n_pairs` paraphrase pairs, or `None`
    /// when the fraction is 0 and every supplied generic pair is used.
    pub fn generic_needed(&self, n_pairs: usize) -> Option<usize> {
        let f = self.paraphrase_fraction;
        (f > 0.0).then(|| (n_pairs as f64 * (1.0 - f) / f).round() as usize)
    }
}

/// Mixes every paraphrase pair with enough generic pairs (sampled without
/// replacement) that paraphrase pairs make up `paraphrase_fraction` of the
/// output, then shuffles. A fraction of 0 yields the generic pairs alone.
pub fn compose_mixture(
    pairs: &[PreferencePair],
    generic: &[PreferencePair],
    spec: &MixtureSpec,
) -> Result<Vec<PreferencePair>, PipelineError> {
    let f = spec.paraphrase_fraction;
    if !(0.0..=1.0).contains(&f) {
        return Err(PipelineError::InvalidFraction(f));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out: Vec<PreferencePair> = match spec.generic_needed(pairs.len()) {
        None => generic.to_vec(),
        Some(required) => {
            if required > generic.len() {
                return Err(PipelineError::InsufficientGeneric {
                    required,
                    available: generic.len(),
                });
            }
            let mut picked: Vec<usize> = (0..generic.len()).collect();
            picked.shuffle(&mut rng);
            picked.truncate(required);
            picked.sort_unstable();
            pairs
                .iter()
                .cloned()
                .chain(picked.into_iter().map(|i| generic[i].clone()))
                .collect()
        }
    };
    out.shuffle(&mut rng);
    Ok(out)
}
