//! JSON-lines labeled corpus: one `{"id", "text", "label"}` object per line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::models::LabeledExample;
use crate::text::TextEncoder;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub id: String,
    pub text: String,
    pub label: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: label {label} is not 0 or 1")]
    InvalidLabel { line: usize, label: u8 },
}

pub fn parse_corpus(contents: &str) -> Result<Vec<LabeledText>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in contents.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let item: LabeledText = serde_json::from_str(raw).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if item.label > 1 {
            return Err(CorpusError::InvalidLabel {
                line: i + 1,
                label: item.label,
            });
        }
        out.push(item);
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<LabeledText>, CorpusError> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

pub fn to_jsonl(items: &[LabeledText]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("plain struct serializes"));
        s.push('\n');
    }
    s
}

pub fn write_corpus(path: impl AsRef<Path>, items: &[LabeledText]) -> Result<(), CorpusError> {
    std::fs::write(path, to_jsonl(items))?;
    Ok(())
}

pub fn encode_corpus(items: &[LabeledText], encoder: &TextEncoder) -> Vec<LabeledExample> {
    items
        .iter()
        .map(|t| LabeledExample::new(encoder.encode(&t.text), t.label))
        .collect()
}
