use std::path::Path;

use serde::{Deserialize, Serialize};

const DEFAULT_KEYWORDS: &str = include_str!("../../data/keywords.txt");

#[derive(Debug, thiserror::Error)]
pub enum KeywordError {
    #[error("keyword set is empty")]
    Empty,
    #[error("failed to read keyword file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lowercased, whitespace-normalized search phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    phrases: Vec<String>,
}

fn normalize(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

impl KeywordSet {
    /// Builds a set from raw phrases. Duplicates after normalization are
    /// dropped, keeping first-seen order.
    pub fn new<I, S>(phrases: I) -> Result<Self, KeywordError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<String> = Vec::new();
        for p in phrases {
            let p = normalize(p.as_ref());
            if !p.is_empty() && !out.contains(&p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(KeywordError::Empty);
        }
        Ok(Self { phrases: out })
    }

    /// Parses the keyword file format: one phrase per line, `#` starts a
    /// comment line, blank lines ignored.
    pub fn parse(contents: &str) -> Result<Self, KeywordError> {
        Self::new(
            contents
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, KeywordError> {
        let path = path.as_ref();
        let contents = std::fs::read_to_string(path).map_err(|source| KeywordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&contents)
    }

    /// The tobacco keyword list shipped with the crate.
    pub fn default_tobacco() -> Self {
        Self::parse(DEFAULT_KEYWORDS).expect("bundled keyword list is non-empty")
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// All phrases that occur in `text` on word boundaries, in order of first
    /// occurrence. Case-insensitive; runs of whitespace in the text compare
    /// equal to a single space. A boundary is any non-alphanumeric character
    /// or the text edge, so `#vaping` matches `vaping`.
    pub fn find_matches(&self, text: &str) -> Vec<String> {
        let hay = normalize(text);
        let mut hits: Vec<(usize, &String)> = self
            .phrases
            .iter()
            .filter_map(|p| first_bounded_match(&hay, p).map(|pos| (pos, p)))
            .collect();
        hits.sort_by_key(|(pos, _)| *pos);
        hits.into_iter().map(|(_, p)| p.clone()).collect()
    }
}

fn first_bounded_match(hay: &str, needle: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(off) = hay[from..].find(needle) {
        let start = from + off;
        let end = start + needle.len();
        let before_ok = hay[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = hay[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return Some(start);
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Convenience wrapper over [`KeywordSet::find_matches`].
pub fn keyword_match(text: &str, keywords: &KeywordSet) -> Vec<String> {
    keywords.find_matches(text)
}
