use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::fnv1a64;

/// Lowercase letters, digits, punctuation, then the blank space.
pub const DEFAULT_ALPHABET: &str =
    "abcdefghijklmnopqrstuvwxyz0123456789'\"`-,;.!?:\\/|_@#$%^*~+=<>()[]{} ";

/// Ordered set of characters that receive a one-hot slot.
///
/// Index of a character is its position in the canonical string, so it is
/// stable across runs and machines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    chars: Vec<char>,
    #[serde(skip)]
    index: HashMap<char, usize>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet is empty")]
    Empty,
    #[error("character {0:?} appears more than once")]
    Duplicate(char),
}

impl Alphabet {
    pub fn new(chars: &str) -> Result<Self, AlphabetError> {
        let chars: Vec<char> = chars.chars().collect();
        if chars.is_empty() {
            return Err(AlphabetError::Empty);
        }
        let mut index = HashMap::with_capacity(chars.len());
        for (i, &c) in chars.iter().enumerate() {
            if index.insert(c, i).is_some() {
                return Err(AlphabetError::Duplicate(c));
            }
        }
        Ok(Self { chars, index })
    }

    /// The fixed 68-symbol tweet alphabet.
    pub fn load() -> Self {
        Self::new(DEFAULT_ALPHABET).expect("default alphabet is well formed")
    }

    /// Number of symbols `m`.
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Stable fingerprint of the ordered symbol list, embedded in checkpoints.
    pub fn fingerprint(&self) -> String {
        let s: String = self.chars.iter().collect();
        format!("{:016x}", fnv1a64(s.as_bytes()))
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::load()
    }
}

impl TryFrom<String> for Alphabet {
    type Error = AlphabetError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<Alphabet> for String {
    fn from(value: Alphabet) -> Self {
        value.chars.into_iter().collect()
    }
}
