//! Builds a running pipeline from a [`PipelineConfig`].

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use notobot_core::audience::{parse_message_pool, AudienceError, GroupConfig, GroupModel};
use notobot_core::models::{Checkpoint, CheckpointError};
use notobot_core::text::{Alphabet, KeywordError, KeywordSet};
use thiserror::Error;
use tokio::task::JoinHandle;

use crate::config::{PipelineConfig, SinkConfig, SourceConfig};
use crate::engine::{ModelScorer, Pipeline, TextScorer};
use crate::runner::{spawn, PipelineHandle, RunnerOptions};
use crate::sink::{DeliverySink, JsonlOutbox, SinkError, WebhookSink};
use crate::source::{HttpPollingSource, JsonlReplaySource, SourceError, TweetSource};
use crate::state::PipelineState;
use crate::store::{EventLog, StoreError};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("keywords: {0}")]
    Keywords(#[from] KeywordError),
    #[error("model checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("message pool {path}: {message}")]
    Pool { path: PathBuf, message: String },
    #[error("audience model: {0}")]
    Audience(#[from] AudienceError),
    #[error("state log: {0}")]
    Store(#[from] StoreError),
    #[error("source: {0}")]
    Source(#[from] SourceError),
    #[error("sink: {0}")]
    Sink(#[from] SinkError),
}

/// Parts ready to hand to [`spawn`].
pub struct Assembly {
    pub pipeline: Pipeline,
    pub source: Box<dyn TweetSource>,
    pub sink: Box<dyn DeliverySink>,
    pub options: RunnerOptions,
}

pub fn load_scorer(cfg: &PipelineConfig) -> Result<Option<ModelScorer>, SetupError> {
    let Some(path) = &cfg.model_checkpoint_path else { return Ok(None) };
    let alphabet = Alphabet::load();
    let ck = Checkpoint::load(path, &alphabet)?;
    Ok(Some(ModelScorer::from_checkpoint(ck, alphabet)))
}

pub fn load_group_model(cfg: &PipelineConfig) -> Result<Option<GroupModel>, SetupError> {
    let Some(path) = &cfg.message_pool_path else { return Ok(None) };
    let pool_err = |message: String| SetupError::Pool { path: path.clone(), message };
    let text = std::fs::read_to_string(path).map_err(|e| pool_err(e.to_string()))?;
    let pool = parse_message_pool(&text).map_err(|e| pool_err(e.to_string()))?;
    if pool.is_empty() {
        return Ok(None);
    }
    let gcfg = GroupConfig { seed: cfg.seed, ..GroupConfig::default() };
    Ok(Some(GroupModel::build(&pool, &gcfg)?))
}

pub fn assemble(cfg: &PipelineConfig) -> Result<Assembly, SetupError> {
    let keywords = match &cfg.keywords_path {
        Some(p) => KeywordSet::from_file(p)?,
        None => KeywordSet::default_tobacco(),
    };
    let scorer = load_scorer(cfg)?.map(|s| Arc::new(s) as Arc<dyn TextScorer>);
    let matcher = load_group_model(cfg)?.map(Arc::new);

    let initial = PipelineState::new(cfg.scanner_enabled);
    let (state, history, log) = match &cfg.state_log_path {
        Some(path) => {
            let (log, rec) = EventLog::open(path, cfg.snapshot_every, initial)?;
            if !rec.events.is_empty() {
                tracing::info!(
                    events = rec.events.len(),
                    last_event_id = rec.state.last_event_id,
                    "recovered pipeline state"
                );
            }
            (rec.state, rec.events, Some(log))
        }
        None => (initial, Vec::new(), None),
    };
    let pipeline = Pipeline::new(
        state,
        history,
        log,
        keywords,
        scorer,
        matcher,
        cfg.classification_threshold,
    );

    let source: Box<dyn TweetSource> = match &cfg.source {
        SourceConfig::Jsonl { path, batch_size } => Box::new(JsonlReplaySource::open(path, *batch_size)?),
        SourceConfig::Http { url, batch_size, timeout_secs } => Box::new(HttpPollingSource::new(
            url.clone(),
            *batch_size,
            Duration::from_secs_f64(*timeout_secs),
        )),
    };
    let sink: Box<dyn DeliverySink> = match &cfg.sink {
        SinkConfig::Jsonl { path } => Box::new(JsonlOutbox::new(path)?),
        SinkConfig::Webhook { url, timeout_secs } => {
            Box::new(WebhookSink::new(url.clone(), Duration::from_secs_f64(*timeout_secs)))
        }
    };
    let options = RunnerOptions { scan_interval: cfg.scan_interval(), retry: cfg.retry.clone(), timer: true };
    Ok(Assembly { pipeline, source, sink, options })
}

/// Assembles and spawns on the current tokio runtime.
pub fn start(cfg: &PipelineConfig) -> Result<(PipelineHandle, JoinHandle<()>), SetupError> {
    let a = assemble(cfg)?;
    Ok(spawn(a.pipeline, a.source, a.sink, a.options))
}
