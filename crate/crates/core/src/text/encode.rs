use serde::{Deserialize, Serialize};

use super::{fnv1a64, Alphabet};

/// Default maximum sequence length (characters kept per tweet).
pub const DEFAULT_MAX_LEN: usize = 280;
/// Default dimension of the hashed bigram feature vector.
pub const DEFAULT_FEATURE_DIM: usize = 512;

/// Binary `m x L` matrix with at most one nonzero per column.
///
/// Stored column-wise as the alphabet index of each position; `None` is an
/// all-zero column (padding or an out-of-alphabet character).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHot {
    rows: usize,
    columns: Vec<Option<u16>>,
}

impl OneHot {
    pub fn from_columns(rows: usize, columns: Vec<Option<u16>>) -> Self {
        debug_assert!(columns.iter().flatten().all(|&r| (r as usize) < rows));
        Self { rows, columns }
    }

    /// Alphabet size `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Sequence length `L`.
    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        u8::from(self.columns[col] == Some(row as u16))
    }

    /// Row index of the hot entry in column `col`, if any.
    pub fn hot(&self, col: usize) -> Option<usize> {
        self.columns[col].map(usize::from)
    }

    pub fn columns(&self) -> &[Option<u16>] {
        &self.columns
    }

    /// One past the last non-zero column; zero for an all-zero matrix.
    pub fn occupied_len(&self) -> usize {
        self.columns
            .iter()
            .rposition(Option::is_some)
            .map_or(0, |p| p + 1)
    }

    pub fn column_sum(&self, col: usize) -> u8 {
        u8::from(self.columns[col].is_some())
    }

    /// Dense row-major copy, mostly useful for tests and debugging.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.cols()]; self.rows];
        for (j, c) in self.columns.iter().enumerate() {
            if let Some(r) = c {
                out[*r as usize][j] = 1;
            }
        }
        out
    }
}

/// One-hot quantization of `text` into `alphabet.len() x max_len`.
///
/// Text is lowercased first. Characters past `max_len` are dropped and short
/// texts are zero padded.
pub fn quantize(text: &str, alphabet: &Alphabet, max_len: usize) -> OneHot {
    assert!(max_len >= 1, "sequence length must be positive");
    let mut columns = vec![None; max_len];
    for (slot, c) in columns.iter_mut().zip(text.to_lowercase().chars()) {
        *slot = alphabet.index_of(c).map(|i| i as u16);
    }
    OneHot::from_columns(alphabet.len(), columns)
}

/// Hashed character-bigram counts, L2-normalized.
///
/// Every lowercased character maps to its alphabet index, or to the shared
/// symbol `m` when it is outside the alphabet. Bigram `(a, b)` has id
/// `a * (m + 1) + b`; its bucket is FNV-1a 64 of the id's little-endian u32
/// bytes, modulo `dim`.
pub fn featurize(text: &str, alphabet: &Alphabet, dim: usize) -> Vec<f64> {
    assert!(dim >= 1, "feature dimension must be positive");
    let m = alphabet.len();
    let symbols: Vec<usize> = text
        .to_lowercase()
        .chars()
        .map(|c| alphabet.index_of(c).unwrap_or(m))
        .collect();
    let mut out = vec![0.0; dim];
    for pair in symbols.windows(2) {
        let id = (pair[0] * (m + 1) + pair[1]) as u32;
        let bucket = (fnv1a64(&id.to_le_bytes()) % dim as u64) as usize;
        out[bucket] += 1.0;
    }
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|v| *v /= norm);
    }
    out
}

/// Both model inputs for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedText {
    pub onehot: OneHot,
    pub features: Vec<f64>,
    /// Character count of the original text (before truncation).
    pub source_len: usize,
}

/// Encoder configuration shared by training and serving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextEncoder {
    pub alphabet: Alphabet,
    pub max_len: usize,
    pub feature_dim: usize,
}

impl Default for TextEncoder {
    fn default() -> Self {
        Self {
            alphabet: Alphabet::load(),
            max_len: DEFAULT_MAX_LEN,
            feature_dim: DEFAULT_FEATURE_DIM,
        }
    }
}

impl TextEncoder {
    pub fn new(alphabet: Alphabet, max_len: usize, feature_dim: usize) -> Self {
        Self {
            alphabet,
            max_len,
            feature_dim,
        }
    }

    pub fn encode(&self, text: &str) -> EncodedText {
        EncodedText {
            onehot: quantize(text, &self.alphabet, self.max_len),
            features: featurize(text, &self.alphabet, self.feature_dim),
            source_len: text.chars().count(),
        }
    }
}
