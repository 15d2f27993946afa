//! Deterministic text encodings and keyword filtering.
//!
//! Two views of a tweet are produced: a one-hot character matrix for the
//! convolutional model and a hashed character-bigram vector for the
//! classical models.

mod alphabet;
mod encode;
mod keywords;

pub use alphabet::{Alphabet, AlphabetError, DEFAULT_ALPHABET};
pub use encode::{
    featurize, quantize, EncodedText, OneHot, TextEncoder, DEFAULT_FEATURE_DIM, DEFAULT_MAX_LEN,
};
pub use keywords::{keyword_match, KeywordError, KeywordSet};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}
