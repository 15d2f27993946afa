//! Append-only log file holding audit events and periodic state snapshots.
//!
//! Each line is one JSON object tagged by `type`: either `event` or
//! `snapshot`. Recovery loads the last snapshot and replays the events
//! after it. A torn final line (crash mid-write) is dropped and truncated.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::AuditEvent;
use crate::state::{PipelineState, StateError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("log replay failed at line {line}: {source}")]
    Replay { line: usize, source: StateError },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
enum LogEntry {
    Event(AuditEvent),
    Snapshot(PipelineState),
}

/// Rebuilt state plus the full event history found in the log.
#[derive(Debug, Clone)]
pub struct Recovered {
    pub state: PipelineState,
    pub events: Vec<AuditEvent>,
    pub snapshots: usize,
    pub truncated_tail: bool,
    /// Events replayed on top of the last snapshot.
    pub since_snapshot: u64,
}

pub struct EventLog {
    path: PathBuf,
    file: File,
    snapshot_every: u64,
    since_snapshot: u64,
}

impl EventLog {
    /// Opens (or creates) the log and rebuilds state from it. `initial` is
    /// used when the log holds no snapshot.
    pub fn open(
        path: impl AsRef<Path>,
        snapshot_every: u64,
        initial: PipelineState,
    ) -> Result<(Self, Recovered), StoreError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let recovered = if path.exists() {
            recover(&path, initial)?
        } else {
            Recovered { state: initial, events: Vec::new(), snapshots: 0, truncated_tail: false, since_snapshot: 0 }
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let since_snapshot = recovered.since_snapshot;
        let log = Self { path, file, snapshot_every: snapshot_every.max(1), since_snapshot };
        Ok((log, recovered))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one event; `after` is the state once it is applied, written
    /// as a snapshot every `snapshot_every` events.
    pub fn append(&mut self, event: &AuditEvent, after: &PipelineState) -> Result<(), StoreError> {
        write_line(&mut self.file, &LogEntry::Event(event.clone()))?;
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            self.snapshot(after)?;
        }
        self.file.flush()?;
        Ok(())
    }

    pub fn snapshot(&mut self, state: &PipelineState) -> Result<(), StoreError> {
        write_line(&mut self.file, &LogEntry::Snapshot(state.clone()))?;
        self.since_snapshot = 0;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), StoreError> {
        self.file.flush()?;
        self.file.sync_data()?;
        Ok(())
    }
}

fn write_line(file: &mut File, entry: &LogEntry) -> Result<(), StoreError> {
    let mut line = serde_json::to_string(entry).map_err(|e| StoreError::Corrupt {
        line: 0,
        message: e.to_string(),
    })?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    Ok(())
}

/// Reads the whole log without opening it for writing.
pub fn recover(path: &Path, initial: PipelineState) -> Result<Recovered, StoreError> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    let mut good_bytes = 0u64;
    let mut truncated_tail = false;
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let total = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            good_bytes += line.len() as u64 + 1;
            continue;
        }
        match serde_json::from_str::<LogEntry>(&line) {
            Ok(entry) => {
                good_bytes += line.len() as u64 + 1;
                entries.push((i + 1, entry));
            }
            Err(_) if i + 1 == total => truncated_tail = true,
            Err(e) => return Err(StoreError::Corrupt { line: i + 1, message: e.to_string() }),
        }
    }
    if truncated_tail {
        OpenOptions::new().write(true).open(path)?.set_len(good_bytes)?;
    }

    let last_snapshot = entries
        .iter()
        .rposition(|(_, e)| matches!(e, LogEntry::Snapshot(_)));
    let mut state = initial;
    let mut snapshots = 0;
    let mut events = Vec::new();
    let mut since_snapshot = 0;
    for (idx, (line, entry)) in entries.into_iter().enumerate() {
        match entry {
            LogEntry::Snapshot(s) => {
                snapshots += 1;
                if Some(idx) == last_snapshot {
                    state = s;
                }
            }
            LogEntry::Event(e) => {
                if last_snapshot.is_none_or(|snap| idx > snap) {
                    state.apply(&e).map_err(|source| StoreError::Replay { line, source })?;
                    since_snapshot += 1;
                }
                events.push(e);
            }
        }
    }
    Ok(Recovered { state, events, snapshots, truncated_tail, since_snapshot })
}
