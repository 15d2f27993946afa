//! Versioned JSON checkpoints bundling a trained model with its encoder.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelSpec, TrainedModel};
use crate::text::{Alphabet, TextEncoder};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("alphabet fingerprint mismatch: checkpoint {found}, expected {expected}")]
    AlphabetMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub max_len: usize,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub alphabet_fingerprint: String,
    pub encoder: EncoderConfig,
    pub spec: ModelSpec,
    pub model: TrainedModel,
}

impl Checkpoint {
    pub fn new(encoder: &TextEncoder, spec: ModelSpec, model: TrainedModel) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            alphabet_fingerprint: encoder.alphabet.fingerprint(),
            encoder: EncoderConfig {
                max_len: encoder.max_len,
                feature_dim: encoder.feature_dim,
            },
            spec,
            model,
        }
    }

    /// Encoder that reproduces the training-time inputs, using `alphabet`.
    pub fn encoder(&self, alphabet: Alphabet) -> TextEncoder {
        TextEncoder::new(alphabet, self.encoder.max_len, self.encoder.feature_dim)
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses and validates against the alphabet the caller will encode with.
    pub fn from_json(json: &str, alphabet: &Alphabet) -> Result<Self, CheckpointError> {
        let ck: Self = serde_json::from_str(json)?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(ck.format_version));
        }
        let expected = alphabet.fingerprint();
        if ck.alphabet_fingerprint != expected {
            return Err(CheckpointError::AlphabetMismatch {
                expected,
                found: ck.alphabet_fingerprint,
            });
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<Self, CheckpointError> {
        Self::from_json(&std::fs::read_to_string(path)?, alphabet)
    }
}
