//! Async driver around [`Pipeline`]. One task owns the pipeline; everyone
//! else talks to it through [`PipelineHandle`], which sends ordered
//! commands and reads published snapshots.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use notobot_core::audience::GroupModel;
use thiserror::Error;
use tokio::sync::{mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::{Instant, MissedTickBehavior};

use crate::config::RetryConfig;
use crate::engine::{PassReport, Pipeline, PipelineError, SharedEvents};
use crate::event::AuditEvent;
use crate::sink::DeliverySink;
use crate::source::TweetSource;
use crate::state::PipelineState;
use crate::types::{PendingIntervention, Status};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("unknown candidate {0}")]
    NotFound(u64),
    #[error("candidate {pending_id} is {from}, cannot become {to}")]
    InvalidTransition { pending_id: u64, from: Status, to: Status },
    #[error("pipeline stopped")]
    Stopped,
    #[error("{0}")]
    Internal(String),
}

impl From<PipelineError> for CommandError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NotFound(id) => CommandError::NotFound(id),
            PipelineError::InvalidTransition { pending_id, from, to } => {
                CommandError::InvalidTransition { pending_id, from, to }
            }
            other => CommandError::Internal(other.to_string()),
        }
    }
}

/// Point-in-time view published after every tick and command.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: PipelineState,
    pub source_exhausted: bool,
    pub ticks: u64,
    pub source_errors: u64,
    pub last_source_error: Option<String>,
    pub pending_retries: usize,
    pub taken_at: DateTime<Utc>,
}

impl Snapshot {
    /// Source drained and nothing left for the loop to do on its own.
    pub fn is_idle(&self) -> bool {
        self.source_exhausted
            && self.pending_retries == 0
            && self.state.ids_with_status(Status::AwaitingClassification).is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickReport {
    /// False when the scanner was off and the tick was skipped.
    pub ran: bool,
    pub ingest: PassReport,
    pub classify: PassReport,
    pub source_error: Option<String>,
    pub deliveries_attempted: usize,
}

enum Command {
    Approve { id: u64, operator_id: String, reply: oneshot::Sender<Result<PendingIntervention, CommandError>> },
    Reject { id: u64, operator_id: String, reply: oneshot::Sender<Result<PendingIntervention, CommandError>> },
    SetScanner { enabled: bool, reply: oneshot::Sender<Result<bool, CommandError>> },
    Tick { reply: oneshot::Sender<TickReport> },
    Shutdown { reply: oneshot::Sender<()> },
}

#[derive(Debug, Clone)]
pub struct RunnerOptions {
    pub scan_interval: Duration,
    pub retry: RetryConfig,
    /// When false, ticks only happen through [`PipelineHandle::tick`].
    pub timer: bool,
}

impl Default for RunnerOptions {
    fn default() -> Self {
        Self { scan_interval: Duration::from_secs(60), retry: RetryConfig::default(), timer: true }
    }
}

#[derive(Clone)]
pub struct PipelineHandle {
    tx: mpsc::Sender<Command>,
    snapshots: watch::Receiver<Arc<Snapshot>>,
    events: SharedEvents,
    matcher: Option<Arc<GroupModel>>,
    model_loaded: bool,
    started: Instant,
}

impl PipelineHandle {
    async fn call<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, CommandError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(make(reply)).await.map_err(|_| CommandError::Stopped)?;
        rx.await.map_err(|_| CommandError::Stopped)
    }

    /// Approves and immediately attempts delivery. The returned record is
    /// `posted` on success and stays `approved` if the sink failed.
    pub async fn approve(&self, id: u64, operator_id: &str) -> Result<PendingIntervention, CommandError> {
        let operator_id = operator_id.to_string();
        self.call(|reply| Command::Approve { id, operator_id, reply }).await?
    }

    pub async fn reject(&self, id: u64, operator_id: &str) -> Result<PendingIntervention, CommandError> {
        let operator_id = operator_id.to_string();
        self.call(|reply| Command::Reject { id, operator_id, reply }).await?
    }

    pub async fn set_scanner(&self, enabled: bool) -> Result<bool, CommandError> {
        self.call(|reply| Command::SetScanner { enabled, reply }).await?
    }

    /// Runs one tick right now, outside the timer.
    pub async fn tick(&self) -> Result<TickReport, CommandError> {
        self.call(|reply| Command::Tick { reply }).await
    }

    pub async fn shutdown(&self) -> Result<(), CommandError> {
        self.call(|reply| Command::Shutdown { reply }).await
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshots.borrow().clone()
    }

    pub fn model_loaded(&self) -> bool {
        self.model_loaded
    }

    pub fn group_model(&self) -> Option<Arc<GroupModel>> {
        self.matcher.clone()
    }

    pub fn uptime(&self) -> Duration {
        self.started.elapsed()
    }

    /// Copy of the full audit log.
    pub fn audit_log(&self) -> Vec<AuditEvent> {
        self.events.read().unwrap().clone()
    }

    /// Events with `event_id > since`, at most `limit`.
    pub fn events_since(&self, since: u64, limit: usize) -> Vec<AuditEvent> {
        let events = self.events.read().unwrap();
        // Ids are dense and start at 1, but a replayed log may begin later.
        let start = events.partition_point(|e| e.event_id <= since);
        events[start..].iter().take(limit).cloned().collect()
    }

    /// Like [`events_since`](Self::events_since) but waits up to `timeout`
    /// for at least one event to appear.
    pub async fn wait_events(&self, since: u64, limit: usize, timeout: Duration) -> Vec<AuditEvent> {
        let mut rx = self.snapshots.clone();
        let deadline = Instant::now() + timeout;
        loop {
            let found = self.events_since(since, limit);
            if !found.is_empty() {
                return found;
            }
            match tokio::time::timeout_at(deadline, rx.changed()).await {
                Ok(Ok(())) => continue,
                _ => return self.events_since(since, limit),
            }
        }
    }

    /// Waits until `pred` holds for a published snapshot.
    pub async fn wait_for(&self, timeout: Duration, pred: impl Fn(&Snapshot) -> bool) -> Option<Arc<Snapshot>> {
        let mut rx = self.snapshots.clone();
        let wait = async move { rx.wait_for(|s| pred(s)).await.ok().map(|s| s.clone()) };
        tokio::time::timeout(timeout, wait).await.ok().flatten()
    }
}

struct Runner {
    pipeline: Pipeline,
    source: Box<dyn TweetSource>,
    sink: Box<dyn DeliverySink>,
    options: RunnerOptions,
    retries: BTreeMap<u64, Instant>,
    ticks: u64,
    source_errors: u64,
    last_source_error: Option<String>,
    model_warned: bool,
}

/// Starts the pipeline task. Candidates recovered in `approved` are retried
/// on the first tick.
pub fn spawn(
    pipeline: Pipeline,
    source: Box<dyn TweetSource>,
    sink: Box<dyn DeliverySink>,
    options: RunnerOptions,
) -> (PipelineHandle, JoinHandle<()>) {
    let now = Instant::now();
    let retries = pipeline
        .state()
        .ids_with_status(Status::Approved)
        .into_iter()
        .map(|id| (id, now))
        .collect();
    let (tx, rx) = mpsc::channel(64);
    let runner = Runner {
        pipeline,
        source,
        sink,
        options,
        retries,
        ticks: 0,
        source_errors: 0,
        last_source_error: None,
        model_warned: false,
    };
    let (publish, snapshots) = watch::channel(Arc::new(runner.snapshot()));
    let handle = PipelineHandle {
        tx,
        snapshots,
        events: runner.pipeline.events(),
        matcher: runner.pipeline.matcher(),
        model_loaded: runner.pipeline.model_loaded(),
        started: now,
    };
    let task = tokio::spawn(runner.run(rx, publish));
    (handle, task)
}

impl Runner {
    fn snapshot(&self) -> Snapshot {
        Snapshot {
            state: self.pipeline.state().clone(),
            source_exhausted: self.source.is_exhausted(),
            ticks: self.ticks,
            source_errors: self.source_errors,
            last_source_error: self.last_source_error.clone(),
            pending_retries: self.retries.len(),
            taken_at: Utc::now(),
        }
    }

    async fn run(mut self, mut rx: mpsc::Receiver<Command>, publish: watch::Sender<Arc<Snapshot>>) {
        let period = self.options.scan_interval.max(Duration::from_millis(1));
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            tokio::select! {
                biased;
                cmd = rx.recv() => {
                    let Some(cmd) = cmd else { break };
                    if let Some(done) = self.handle(cmd).await {
                        self.finish();
                        publish.send_replace(Arc::new(self.snapshot()));
                        let _ = done.send(());
                        return;
                    }
                }
                _ = interval.tick(), if self.options.timer => {
                    self.tick().await;
                }
            }
            publish.send_replace(Arc::new(self.snapshot()));
        }
        self.finish();
    }

    fn finish(&mut self) {
        if let Err(e) = self.pipeline.flush() {
            tracing::error!("flushing state log: {e}");
        }
    }

    async fn handle(&mut self, cmd: Command) -> Option<oneshot::Sender<()>> {
        match cmd {
            Command::Approve { id, operator_id, reply } => {
                let result = match self.pipeline.approve(id, &operator_id) {
                    Ok(()) => {
                        self.deliver(id).await;
                        Ok(self.pipeline.candidate(id).cloned().expect("approved candidate exists"))
                    }
                    Err(e) => Err(e.into()),
                };
                let _ = reply.send(result);
            }
            Command::Reject { id, operator_id, reply } => {
                let result = self
                    .pipeline
                    .reject(id, &operator_id)
                    .map(|()| self.pipeline.candidate(id).cloned().expect("rejected candidate exists"))
                    .map_err(Into::into);
                let _ = reply.send(result);
            }
            Command::SetScanner { enabled, reply } => {
                let _ = reply.send(self.pipeline.set_scanner(enabled).map_err(Into::into));
            }
            Command::Tick { reply } => {
                let report = self.tick().await;
                let _ = reply.send(report);
            }
            Command::Shutdown { reply } => return Some(reply),
        }
        None
    }

    /// One scan tick: poll, filter, classify, then retry due deliveries.
    /// Skipped entirely while the scanner is off.
    async fn tick(&mut self) -> TickReport {
        let mut report = TickReport::default();
        if !self.pipeline.state().scanner_enabled {
            return report;
        }
        report.ran = true;
        self.ticks += 1;

        if !self.source.is_exhausted() {
            match self.source.next_batch().await {
                Ok(batch) => match self.pipeline.ingest(batch) {
                    Ok(r) => report.ingest = r,
                    Err(e) => tracing::error!("ingest failed: {e}"),
                },
                Err(e) => {
                    tracing::warn!("source poll failed, retrying next tick: {e}");
                    self.source_errors += 1;
                    self.last_source_error = Some(e.to_string());
                    report.source_error = Some(e.to_string());
                }
            }
        }

        match self.pipeline.classify_pending() {
            Ok(r) => report.classify = r,
            Err(PipelineError::ModelNotLoaded) => {
                if !self.model_warned {
                    tracing::warn!("no classifier loaded; candidates stay awaiting classification");
                    self.model_warned = true;
                }
            }
            Err(e) => tracing::error!("classification failed: {e}"),
        }

        let now = Instant::now();
        let due: Vec<u64> = self.retries.iter().filter(|(_, at)| **at <= now).map(|(id, _)| *id).collect();
        for id in due {
            report.deliveries_attempted += 1;
            self.deliver(id).await;
        }
        report
    }

    async fn deliver(&mut self, id: u64) {
        let record = match self.pipeline.outbox_record(id) {
            Ok(r) => r,
            Err(e) => {
                tracing::error!("cannot build delivery for {id}: {e}");
                self.retries.remove(&id);
                return;
            }
        };
        let outcome = self.sink.deliver(&record).await;
        let result = match outcome {
            Ok(()) => self.pipeline.record_posted(record).map(|()| {
                self.retries.remove(&id);
            }),
            Err(e) => {
                tracing::warn!("delivery of {id} failed: {e}");
                self.pipeline.record_delivery_failure(id, e.to_string()).map(|attempt| {
                    self.retries.insert(id, Instant::now() + self.options.retry.delay(attempt));
                })
            }
        };
        if let Err(e) = result {
            tracing::error!("recording delivery outcome for {id}: {e}");
        }
    }
}
