use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use thiserror::Error;

use crate::types::OutboxRecord;

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("sink unavailable: {0}")]
    Unavailable(String),
    #[error("sink io: {0}")]
    Io(#[from] std::io::Error),
}

/// Where approved interventions are delivered. `Ok` is the acknowledgment
/// that moves a candidate to posted.
#[async_trait]
pub trait DeliverySink: Send {
    async fn deliver(&mut self, record: &OutboxRecord) -> Result<(), SinkError>;
}

/// Appends one JSON line per delivery.
#[derive(Debug, Clone)]
pub struct JsonlOutbox {
    path: PathBuf,
}

impl JsonlOutbox {
    pub fn new(path: impl AsRef<Path>) -> Result<Self, SinkError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub fn read_outbox(path: impl AsRef<Path>) -> std::io::Result<Vec<OutboxRecord>> {
    let contents = match std::fs::read_to_string(path) {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    contents
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(std::io::Error::other))
        .collect()
}

#[async_trait]
impl DeliverySink for JsonlOutbox {
    async fn deliver(&mut self, record: &OutboxRecord) -> Result<(), SinkError> {
        let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

/// POSTs each record as JSON; any non-2xx reply is a failure.
pub struct WebhookSink {
    client: reqwest::Client,
    url: String,
}

impl WebhookSink {
    pub fn new(url: impl Into<String>, timeout: std::time::Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("http client builds");
        Self { client, url: url.into() }
    }
}

#[async_trait]
impl DeliverySink for WebhookSink {
    async fn deliver(&mut self, record: &OutboxRecord) -> Result<(), SinkError> {
        let resp = self
            .client
            .post(&self.url)
            .json(record)
            .send()
            .await
            .map_err(|e| SinkError::Unavailable(e.to_string()))?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(SinkError::Unavailable(format!("webhook returned {}", resp.status())))
        }
    }
}

#[derive(Debug, Default)]
struct MemorySinkInner {
    delivered: Vec<OutboxRecord>,
    fail_next: usize,
    down: bool,
    attempts: usize,
}

/// In-process sink with fault injection. Clones share state.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    inner: Arc<Mutex<MemorySinkInner>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delivered(&self) -> Vec<OutboxRecord> {
        self.inner.lock().unwrap().delivered.clone()
    }

    pub fn attempts(&self) -> usize {
        self.inner.lock().unwrap().attempts
    }

    pub fn fail_next(&self, n: usize) {
        self.inner.lock().unwrap().fail_next += n;
    }

    /// While down, every delivery fails.
    pub fn set_down(&self, down: bool) {
        self.inner.lock().unwrap().down = down;
    }
}

#[async_trait]
impl DeliverySink for MemorySink {
    async fn deliver(&mut self, record: &OutboxRecord) -> Result<(), SinkError> {
        let mut inner = self.inner.lock().unwrap();
        inner.attempts += 1;
        if inner.down {
            return Err(SinkError::Unavailable("sink down".into()));
        }
        if inner.fail_next > 0 {
            inner.fail_next -= 1;
            return Err(SinkError::Unavailable("injected failure".into()));
        }
        inner.delivered.push(record.clone());
        Ok(())
    }
}
