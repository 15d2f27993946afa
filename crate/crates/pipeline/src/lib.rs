//! Stream pipeline: poll a post source on an interval, keyword-filter,
//! classify, match an intervention, and stage it for operator approval.
//! All changes are recorded as audit events in an append-only log.

pub mod config;
pub mod engine;
pub mod event;
pub mod fixture;
pub mod runner;
pub mod setup;
pub mod sink;
pub mod source;
pub mod state;
pub mod store;
pub mod types;

pub use config::PipelineConfig;
pub use engine::{funnel, funnel_is_ordered, ModelScorer, Pipeline, PipelineError, TextScorer};
pub use event::{AuditEvent, EventKind};
pub use runner::{spawn, CommandError, PipelineHandle, RunnerOptions, Snapshot, TickReport};
pub use state::{PipelineState, StatusCounts};
pub use types::{OutboxRecord, PendingIntervention, ProposedIntervention, Status, TweetRecord};
