use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{AuditEvent, EventKind};
use crate::types::{PendingIntervention, Status, Transition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("event id {found} out of sequence, expected {expected}")]
    OutOfSequence { expected: u64, found: u64 },
    #[error("event timestamp {at} precedes {last}")]
    TimeWentBackwards { at: DateTime<Utc>, last: DateTime<Utc> },
    #[error("tweet {0} already scanned")]
    DuplicateTweet(String),
    #[error("tweet {0} was never scanned")]
    NotScanned(String),
    #[error("pending id {found} out of sequence, expected {expected}")]
    PendingIdOutOfSequence { expected: u64, found: u64 },
    #[error("unknown pending id {0}")]
    UnknownCandidate(u64),
    #[error("candidate {pending_id}: cannot go from {from} to {to}")]
    InvalidTransition { pending_id: u64, from: Status, to: Status },
    #[error("candidate {pending_id}: event {event} not allowed in status {status}")]
    InvalidEvent { pending_id: u64, event: &'static str, status: Status },
}

/// Everything the pipeline knows, rebuilt by folding audit events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub scanner_enabled: bool,
    pub candidates: BTreeMap<u64, PendingIntervention>,
    pub seen: BTreeSet<String>,
    pub next_pending_id: u64,
    pub last_event_id: u64,
    pub last_event_at: Option<DateTime<Utc>>,
    pub scanned: u64,
}

/// Candidate totals by status.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub awaiting_classification: usize,
    pub awaiting_approval: usize,
    pub approved: usize,
    pub rejected: usize,
    pub posted: usize,
    pub discarded: usize,
}

impl StatusCounts {
    pub fn get(&self, s: Status) -> usize {
        match s {
            Status::AwaitingClassification => self.awaiting_classification,
            Status::AwaitingApproval => self.awaiting_approval,
            Status::Approved => self.approved,
            Status::Rejected => self.rejected,
            Status::Posted => self.posted,
            Status::Discarded => self.discarded,
        }
    }

    fn bump(&mut self, s: Status) {
        let slot = match s {
            Status::AwaitingClassification => &mut self.awaiting_classification,
            Status::AwaitingApproval => &mut self.awaiting_approval,
            Status::Approved => &mut self.approved,
            Status::Rejected => &mut self.rejected,
            Status::Posted => &mut self.posted,
            Status::Discarded => &mut self.discarded,
        };
        *slot += 1;
    }

    pub fn total(&self) -> usize {
        Status::ALL.iter().map(|&s| self.get(s)).sum()
    }
}

impl PipelineState {
    pub fn new(scanner_enabled: bool) -> Self {
        Self {
            scanner_enabled,
            candidates: BTreeMap::new(),
            seen: BTreeSet::new(),
            next_pending_id: 1,
            last_event_id: 0,
            last_event_at: None,
            scanned: 0,
        }
    }

    pub fn candidate(&self, id: u64) -> Option<&PendingIntervention> {
        self.candidates.get(&id)
    }

    pub fn counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for p in self.candidates.values() {
            c.bump(p.status);
        }
        c
    }

    /// Ids with the given status, oldest first.
    pub fn ids_with_status(&self, status: Status) -> Vec<u64> {
        self.candidates
            .values()
            .filter(|p| p.status == status)
            .map(|p| p.pending_id)
            .collect()
    }

    /// Folds one event into the state, rejecting anything the transition
    /// graph or the log ordering forbids. On error the state is unchanged.
    pub fn apply(&mut self, event: &AuditEvent) -> Result<(), StateError> {
        let expected = self.last_event_id + 1;
        if event.event_id != expected {
            return Err(StateError::OutOfSequence { expected, found: event.event_id });
        }
        if let Some(last) = self.last_event_at {
            if event.at < last {
                return Err(StateError::TimeWentBackwards { at: event.at, last });
            }
        }
        self.apply_kind(event)?;
        self.last_event_id = event.event_id;
        self.last_event_at = Some(event.at);
        Ok(())
    }

    fn apply_kind(&mut self, event: &AuditEvent) -> Result<(), StateError> {
        let at = event.at;
        let event_id = event.event_id;
        match &event.kind {
            EventKind::Scanned { tweet_id } => {
                if !self.seen.insert(tweet_id.clone()) {
                    return Err(StateError::DuplicateTweet(tweet_id.clone()));
                }
                self.scanned += 1;
            }
            EventKind::Filtered { pending_id, tweet, matched_keywords } => {
                if !self.seen.contains(&tweet.id) {
                    return Err(StateError::NotScanned(tweet.id.clone()));
                }
                if *pending_id != self.next_pending_id {
                    return Err(StateError::PendingIdOutOfSequence {
                        expected: self.next_pending_id,
                        found: *pending_id,
                    });
                }
                self.next_pending_id += 1;
                self.candidates.insert(
                    *pending_id,
                    PendingIntervention {
                        pending_id: *pending_id,
                        candidate: tweet.clone(),
                        matched_keywords: matched_keywords.clone(),
                        confidence: None,
                        proposal: None,
                        status: Status::AwaitingClassification,
                        history: vec![Transition {
                            status: Status::AwaitingClassification,
                            at,
                            event_id,
                        }],
                        operator_id: None,
                        discard_reason: None,
                        delivery_attempts: 0,
                        last_delivery_error: None,
                    },
                );
            }
            EventKind::Classified { pending_id, confidence } => {
                let p = self.require(*pending_id, "classified", Status::AwaitingClassification)?;
                p.confidence = Some(*confidence);
            }
            EventKind::Matched { pending_id, proposal } => {
                let p = self.transition(*pending_id, Status::AwaitingApproval, at, event_id)?;
                p.proposal = Some(proposal.clone());
            }
            EventKind::Discarded { pending_id, reason } => {
                let p = self.transition(*pending_id, Status::Discarded, at, event_id)?;
                p.discard_reason = Some(reason.clone());
            }
            EventKind::Approved { pending_id, operator_id } => {
                let p = self.transition(*pending_id, Status::Approved, at, event_id)?;
                p.operator_id = Some(operator_id.clone());
            }
            EventKind::Rejected { pending_id, operator_id } => {
                let p = self.transition(*pending_id, Status::Rejected, at, event_id)?;
                p.operator_id = Some(operator_id.clone());
            }
            EventKind::DeliveryFailed { pending_id, attempt, error } => {
                let p = self.require(*pending_id, "delivery_failed", Status::Approved)?;
                p.delivery_attempts = *attempt;
                p.last_delivery_error = Some(error.clone());
            }
            EventKind::Posted { pending_id, .. } => {
                let p = self.transition(*pending_id, Status::Posted, at, event_id)?;
                p.delivery_attempts += 1;
            }
            EventKind::ScannerToggled { enabled } => self.scanner_enabled = *enabled,
        }
        Ok(())
    }

    fn require(
        &mut self,
        pending_id: u64,
        event: &'static str,
        status: Status,
    ) -> Result<&mut PendingIntervention, StateError> {
        let p = self
            .candidates
            .get_mut(&pending_id)
            .ok_or(StateError::UnknownCandidate(pending_id))?;
        if p.status != status {
            return Err(StateError::InvalidEvent { pending_id, event, status: p.status });
        }
        Ok(p)
    }

    fn transition(
        &mut self,
        pending_id: u64,
        to: Status,
        at: DateTime<Utc>,
        event_id: u64,
    ) -> Result<&mut PendingIntervention, StateError> {
        let p = self
            .candidates
            .get_mut(&pending_id)
            .ok_or(StateError::UnknownCandidate(pending_id))?;
        if !p.status.can_become(to) {
            return Err(StateError::InvalidTransition { pending_id, from: p.status, to });
        }
        p.status = to;
        p.history.push(Transition { status: to, at, event_id });
        Ok(p)
    }
}
