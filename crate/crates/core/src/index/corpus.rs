use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::IndexError;

/// On-disk layout of a corpus of documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One document per line; blank lines are skipped.
    Lines,
    /// One JSON object per line with a string field `text`.
    Jsonl,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Lines,
        }
    }
}

#[derive(Deserialize)]
struct JsonDoc {
    text: String,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<String>, IndexError> {
    let raw = fs::read_to_string(path)?;
    parse_corpus(&raw, format)
}

pub(crate) fn parse_corpus(raw: &str, format: CorpusFormat) -> Result<Vec<String>, IndexError> {
    let mut docs = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match format {
            CorpusFormat::Lines => docs.push(line.to_string()),
            CorpusFormat::Jsonl => {
                let doc: JsonDoc = serde_json::from_str(line).map_err(|e| IndexError::Corpus {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                docs.push(doc.text);
            }
        }
    }
    Ok(docs)
}
