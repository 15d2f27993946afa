//! The single-writer core: turns inputs into audit events and folds them
//! into [`PipelineState`]. No I/O besides the optional event log.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use notobot_core::audience::GroupModel;
use notobot_core::models::{Checkpoint, Classifier, ModelError, TrainedModel};
use notobot_core::text::{Alphabet, KeywordSet, TextEncoder};
use thiserror::Error;

use crate::event::{AuditEvent, EventKind};
use crate::state::{PipelineState, StateError};
use crate::store::{EventLog, StoreError};
use crate::types::{OutboxRecord, PendingIntervention, ProposedIntervention, Status, TweetRecord};

pub const REASON_BELOW_THRESHOLD: &str = "below_threshold";
pub const REASON_NO_BIN: &str = "no_intervention_bin";
pub const REASON_NO_MATCHER: &str = "no_message_pool";
pub const REASON_BAD_SCORE: &str = "non_finite_confidence";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no classifier loaded")]
    ModelNotLoaded,
    #[error("classifier failed: {0}")]
    Model(#[from] ModelError),
    #[error("unknown candidate {0}")]
    NotFound(u64),
    #[error("candidate {pending_id} is {from}, cannot become {to}")]
    InvalidTransition { pending_id: u64, from: Status, to: Status },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Maps a post's text to the probability that it is pro-tobacco.
pub trait TextScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<f64, ModelError>;
}

impl<F: Fn(&str) -> f64 + Send + Sync> TextScorer for F {
    fn score(&self, text: &str) -> Result<f64, ModelError> {
        Ok(self(text))
    }
}

/// A trained classifier plus the encoder it was trained with.
#[derive(Debug, Clone)]
pub struct ModelScorer {
    pub model_name: String,
    encoder: TextEncoder,
    model: TrainedModel,
}

impl ModelScorer {
    pub fn new(model_name: impl Into<String>, encoder: TextEncoder, model: TrainedModel) -> Self {
        Self { model_name: model_name.into(), encoder, model }
    }

    pub fn from_checkpoint(ck: Checkpoint, alphabet: Alphabet) -> Self {
        let encoder = ck.encoder(alphabet);
        Self::new(ck.spec.name(), encoder, ck.model)
    }
}

impl TextScorer for ModelScorer {
    fn score(&self, text: &str) -> Result<f64, ModelError> {
        self.model.predict_proba(&self.encoder.encode(text))
    }
}

pub type SharedEvents = Arc<RwLock<Vec<AuditEvent>>>;

pub struct Pipeline {
    state: PipelineState,
    events: SharedEvents,
    log: Option<EventLog>,
    keywords: KeywordSet,
    scorer: Option<Arc<dyn TextScorer>>,
    matcher: Option<Arc<GroupModel>>,
    threshold: f64,
}

/// What one scan or classification pass did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PassReport {
    pub scanned: usize,
    pub duplicates: usize,
    pub skipped_empty: usize,
    pub filtered: usize,
    pub matched: usize,
    pub discarded: usize,
}

impl Pipeline {
    pub fn new(
        state: PipelineState,
        history: Vec<AuditEvent>,
        log: Option<EventLog>,
        keywords: KeywordSet,
        scorer: Option<Arc<dyn TextScorer>>,
        matcher: Option<Arc<GroupModel>>,
        threshold: f64,
    ) -> Self {
        Self {
            state,
            events: Arc::new(RwLock::new(history)),
            log,
            keywords,
            scorer,
            matcher,
            threshold,
        }
    }

    pub fn state(&self) -> &PipelineState {
        &self.state
    }

    pub fn events(&self) -> SharedEvents {
        self.events.clone()
    }

    pub fn model_loaded(&self) -> bool {
        self.scorer.is_some()
    }

    pub fn set_scorer(&mut self, scorer: Option<Arc<dyn TextScorer>>) {
        self.scorer = scorer;
    }

    pub fn matcher(&self) -> Option<Arc<GroupModel>> {
        self.matcher.clone()
    }

    fn now(&self) -> DateTime<Utc> {
        let now = Utc::now();
        match self.state.last_event_at {
            Some(last) if last > now => last,
            _ => now,
        }
    }

    /// Applies, persists and publishes one event.
    fn emit(&mut self, kind: EventKind) -> Result<AuditEvent, PipelineError> {
        let event = AuditEvent { event_id: self.state.last_event_id + 1, at: self.now(), kind };
        self.state.apply(&event)?;
        if let Some(log) = self.log.as_mut() {
            log.append(&event, &self.state)?;
        }
        self.events.write().unwrap().push(event.clone());
        Ok(event)
    }

    /// Keeps new posts with at least one keyword hit as candidates.
    pub fn ingest(&mut self, batch: Vec<TweetRecord>) -> Result<PassReport, PipelineError> {
        let mut report = PassReport::default();
        for tweet in batch {
            if self.state.seen.contains(&tweet.id) {
                report.duplicates += 1;
                continue;
            }
            if tweet.text.trim().is_empty() {
                report.skipped_empty += 1;
                continue;
            }
            self.emit(EventKind::Scanned { tweet_id: tweet.id.clone() })?;
            report.scanned += 1;
            let matched_keywords = self.keywords.find_matches(&tweet.text);
            if !matched_keywords.is_empty() {
                let pending_id = self.state.next_pending_id;
                self.emit(EventKind::Filtered { pending_id, tweet, matched_keywords })?;
                report.filtered += 1;
            }
        }
        Ok(report)
    }

    /// Classifies every waiting candidate, oldest first.
    pub fn classify_pending(&mut self) -> Result<PassReport, PipelineError> {
        let mut report = PassReport::default();
        for id in self.state.ids_with_status(Status::AwaitingClassification) {
            match self.classify_one(id)? {
                Status::AwaitingApproval => report.matched += 1,
                _ => report.discarded += 1,
            }
        }
        Ok(report)
    }

    pub fn classify_one(&mut self, pending_id: u64) -> Result<Status, PipelineError> {
        let scorer = self.scorer.as_ref().ok_or(PipelineError::ModelNotLoaded)?;
        let p = self.state.candidate(pending_id).ok_or(PipelineError::NotFound(pending_id))?;
        if p.status != Status::AwaitingClassification {
            return Err(PipelineError::InvalidTransition {
                pending_id,
                from: p.status,
                to: Status::AwaitingApproval,
            });
        }
        let confidence = scorer.score(&p.candidate.text)?;
        let author = p.candidate.author;
        if !confidence.is_finite() {
            return self.discard(pending_id, REASON_BAD_SCORE);
        }
        self.emit(EventKind::Classified { pending_id, confidence })?;
        if confidence < self.threshold {
            return self.discard(pending_id, REASON_BELOW_THRESHOLD);
        }
        let Some(matcher) = self.matcher.clone() else {
            return self.discard(pending_id, REASON_NO_MATCHER);
        };
        let (bin_id, bin_path) = matcher.route(&author);
        let Some(message) = matcher.representative(bin_id).cloned() else {
            return self.discard(pending_id, REASON_NO_BIN);
        };
        let proposal = ProposedIntervention { bin_id, bin_path, message };
        self.emit(EventKind::Matched { pending_id, proposal })?;
        Ok(Status::AwaitingApproval)
    }

    fn discard(&mut self, pending_id: u64, reason: &str) -> Result<Status, PipelineError> {
        self.emit(EventKind::Discarded { pending_id, reason: reason.into() })?;
        Ok(Status::Discarded)
    }

    fn check(&self, pending_id: u64, to: Status) -> Result<(), PipelineError> {
        let p = self.state.candidate(pending_id).ok_or(PipelineError::NotFound(pending_id))?;
        if !p.status.can_become(to) {
            return Err(PipelineError::InvalidTransition { pending_id, from: p.status, to });
        }
        Ok(())
    }

    pub fn approve(&mut self, pending_id: u64, operator_id: &str) -> Result<(), PipelineError> {
        self.check(pending_id, Status::Approved)?;
        self.emit(EventKind::Approved { pending_id, operator_id: operator_id.into() })?;
        Ok(())
    }

    pub fn reject(&mut self, pending_id: u64, operator_id: &str) -> Result<(), PipelineError> {
        self.check(pending_id, Status::Rejected)?;
        self.emit(EventKind::Rejected { pending_id, operator_id: operator_id.into() })?;
        Ok(())
    }

    /// Emits an event only when the setting actually changes.
    pub fn set_scanner(&mut self, enabled: bool) -> Result<bool, PipelineError> {
        if self.state.scanner_enabled != enabled {
            self.emit(EventKind::ScannerToggled { enabled })?;
        }
        Ok(self.state.scanner_enabled)
    }

    /// The record a sink should receive for an approved candidate.
    pub fn outbox_record(&self, pending_id: u64) -> Result<OutboxRecord, PipelineError> {
        self.check(pending_id, Status::Posted)?;
        let p = &self.state.candidates[&pending_id];
        let proposal = p.proposal.as_ref().expect("approved candidates carry a proposal");
        let handle = p.candidate.mention_handle();
        Ok(OutboxRecord {
            pending_id,
            candidate_id: p.candidate.id.clone(),
            message_id: proposal.message.message_id.clone(),
            text: format!("@{handle} {}", proposal.message.text),
            mentioned_user: handle,
            posted_at: self.now(),
        })
    }

    pub fn record_posted(&mut self, delivery: OutboxRecord) -> Result<(), PipelineError> {
        let pending_id = delivery.pending_id;
        self.check(pending_id, Status::Posted)?;
        self.emit(EventKind::Posted { pending_id, delivery })?;
        Ok(())
    }

    /// Logs a failed attempt; returns the attempt number.
    pub fn record_delivery_failure(&mut self, pending_id: u64, error: String) -> Result<u32, PipelineError> {
        self.check(pending_id, Status::Posted)?;
        let attempt = self.state.candidates[&pending_id].delivery_attempts + 1;
        self.emit(EventKind::DeliveryFailed { pending_id, attempt, error })?;
        Ok(attempt)
    }

    pub fn candidate(&self, pending_id: u64) -> Option<&PendingIntervention> {
        self.state.candidate(pending_id)
    }

    pub fn flush(&mut self) -> Result<(), PipelineError> {
        if let Some(log) = self.log.as_mut() {
            log.snapshot(&self.state)?;
            log.sync()?;
        }
        Ok(())
    }
}

/// Tallies used by the ordering invariant
/// posted ≤ approved ≤ matched ≤ filtered ≤ scanned.
pub fn funnel(events: &[AuditEvent]) -> BTreeMap<&'static str, usize> {
    let mut counts = crate::event::count_kinds(events);
    for k in ["scanned", "filtered", "matched", "approved", "posted"] {
        counts.entry(k).or_insert(0);
    }
    counts
}

pub fn funnel_is_ordered(events: &[AuditEvent]) -> bool {
    let c = funnel(events);
    c["posted"] <= c["approved"]
        && c["approved"] <= c["matched"]
        && c["matched"] <= c["filtered"]
        && c["filtered"] <= c["scanned"]
}
