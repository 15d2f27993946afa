use std::collections::VecDeque;
use std::path::Path;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::TweetRecord;

#[derive(Debug, Error)]
pub enum SourceError {
    /// Transient; the next tick tries again.
    #[error("source unavailable: {0}")]
    Unavailable(String),
    #[error("bad source record at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("source io: {0}")]
    Io(#[from] std::io::Error),
}

/// Where posts come from. One call per scan tick.
#[async_trait]
pub trait TweetSource: Send {
    async fn next_batch(&mut self) -> Result<Vec<TweetRecord>, SourceError>;
    /// True once the source will never yield anything new.
    fn is_exhausted(&self) -> bool;
}

pub fn parse_tweets(contents: &str) -> Result<Vec<TweetRecord>, SourceError> {
    contents
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SourceError::Parse { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn tweets_to_jsonl(tweets: &[TweetRecord]) -> String {
    let mut out = String::new();
    for t in tweets {
        out.push_str(&serde_json::to_string(t).expect("tweet serializes"));
        out.push('\n');
    }
    out
}

/// Replays a JSONL file of [`TweetRecord`]s, `batch_size` per tick.
#[derive(Debug, Clone)]
pub struct JsonlReplaySource {
    tweets: Vec<TweetRecord>,
    cursor: usize,
    batch_size: usize,
}

impl JsonlReplaySource {
    pub fn open(path: impl AsRef<Path>, batch_size: usize) -> Result<Self, SourceError> {
        Ok(Self::from_records(parse_tweets(&std::fs::read_to_string(path)?)?, batch_size))
    }

    pub fn from_records(tweets: Vec<TweetRecord>, batch_size: usize) -> Self {
        Self { tweets, cursor: 0, batch_size: batch_size.max(1) }
    }

    pub fn remaining(&self) -> usize {
        self.tweets.len() - self.cursor
    }
}

#[async_trait]
impl TweetSource for JsonlReplaySource {
    async fn next_batch(&mut self) -> Result<Vec<TweetRecord>, SourceError> {
        let end = (self.cursor + self.batch_size).min(self.tweets.len());
        let batch = self.tweets[self.cursor..end].to_vec();
        self.cursor = end;
        Ok(batch)
    }

    fn is_exhausted(&self) -> bool {
        self.cursor >= self.tweets.len()
    }
}

/// Response body of the mock feed service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedPage {
    pub tweets: Vec<TweetRecord>,
    pub next_cursor: usize,
    pub exhausted: bool,
}

/// Polls `GET {url}?cursor=N&limit=M` on a feed service returning [`FeedPage`].
pub struct HttpPollingSource {
    client: reqwest::Client,
    url: String,
    cursor: usize,
    batch_size: usize,
    exhausted: bool,
}

impl HttpPollingSource {
    pub fn new(url: impl Into<String>, batch_size: usize, timeout: std::time::Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("http client builds");
        Self { client, url: url.into(), cursor: 0, batch_size: batch_size.max(1), exhausted: false }
    }
}

#[async_trait]
impl TweetSource for HttpPollingSource {
    async fn next_batch(&mut self) -> Result<Vec<TweetRecord>, SourceError> {
        let unavailable = |e: reqwest::Error| SourceError::Unavailable(e.to_string());
        let sep = if self.url.contains('?') { '&' } else { '?' };
        let url = format!("{}{sep}cursor={}&limit={}", self.url, self.cursor, self.batch_size);
        let resp = self
            .client
            .get(url)
            .send()
            .await
            .map_err(unavailable)?;
        if !resp.status().is_success() {
            return Err(SourceError::Unavailable(format!("feed returned {}", resp.status())));
        }
        let page: FeedPage = resp.json().await.map_err(unavailable)?;
        self.cursor = page.next_cursor;
        self.exhausted = page.exhausted;
        Ok(page.tweets)
    }

    fn is_exhausted(&self) -> bool {
        self.exhausted
    }
}

#[derive(Debug, Default)]
struct MemoryInner {
    batches: VecDeque<Vec<TweetRecord>>,
    failures: usize,
    closed: bool,
    calls: usize,
}

/// Scripted in-process source for tests. Clones share the same queue, so a
/// test can keep one handle while the pipeline owns another.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    inner: Arc<Mutex<MemoryInner>>,
}

impl MemorySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_batch(&self, batch: Vec<TweetRecord>) {
        self.inner.lock().unwrap().batches.push_back(batch);
    }

    /// The next `n` polls fail with [`SourceError::Unavailable`].
    pub fn fail_next(&self, n: usize) {
        self.inner.lock().unwrap().failures += n;
    }

    /// Marks the source exhausted once queued batches drain.
    pub fn close(&self) {
        self.inner.lock().unwrap().closed = true;
    }

    /// Number of polls made so far.
    pub fn calls(&self) -> usize {
        self.inner.lock().unwrap().calls
    }

    pub fn pending_batches(&self) -> usize {
        self.inner.lock().unwrap().batches.len()
    }
}

#[async_trait]
impl TweetSource for MemorySource {
    async fn next_batch(&mut self) -> Result<Vec<TweetRecord>, SourceError> {
        let mut inner = self.inner.lock().unwrap();
        inner.calls += 1;
        if inner.failures > 0 {
            inner.failures -= 1;
            return Err(SourceError::Unavailable("injected failure".into()));
        }
        Ok(inner.batches.pop_front().unwrap_or_default())
    }

    fn is_exhausted(&self) -> bool {
        let inner = self.inner.lock().unwrap();
        inner.closed && inner.batches.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, Utc};
    use notobot_core::audience::UserMetadata;

    fn tweet(id: &str) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            text: "x".into(),
            author: UserMetadata::default(),
            created_at: DateTime::<Utc>::UNIX_EPOCH,
            screen_name: "u".into(),
        }
    }

    #[tokio::test]
    async fn jsonl_replay_batches() {
        let tweets: Vec<_> = (0..5).map(|i| tweet(&format!("t{i}"))).collect();
        let parsed = parse_tweets(&tweets_to_jsonl(&tweets)).unwrap();
        assert_eq!(parsed, tweets);
        let mut src = JsonlReplaySource::from_records(parsed, 2);
        let mut sizes = vec![];
        while !src.is_exhausted() {
            sizes.push(src.next_batch().await.unwrap().len());
        }
        assert_eq!(sizes, vec![2, 2, 1]);
        assert!(src.next_batch().await.unwrap().is_empty());
    }

    #[test]
    fn parse_error_reports_line() {
        let err = parse_tweets("\n{nope}\n").unwrap_err();
        assert!(matches!(err, SourceError::Parse { line: 2, .. }));
    }

    #[tokio::test]
    async fn memory_source_failures() {
        let src = MemorySource::new();
        let mut owned = src.clone();
        src.push_batch(vec![tweet("a")]);
        src.fail_next(1);
        assert!(owned.next_batch().await.is_err());
        assert_eq!(owned.next_batch().await.unwrap().len(), 1);
        assert!(!owned.is_exhausted());
        src.close();
        assert!(owned.is_exhausted());
        assert_eq!(src.calls(), 2);
    }
}
