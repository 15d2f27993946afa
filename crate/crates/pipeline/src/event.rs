use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::types::{OutboxRecord, ProposedIntervention, TweetRecord};

/// Every state change, in the order it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub event_id: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    /// A new post id was pulled from the source.
    Scanned { tweet_id: String },
    /// The post matched at least one keyword and became a candidate.
    Filtered {
        pending_id: u64,
        tweet: TweetRecord,
        matched_keywords: Vec<String>,
    },
    Classified { pending_id: u64, confidence: f64 },
    Matched {
        pending_id: u64,
        proposal: ProposedIntervention,
    },
    Discarded { pending_id: u64, reason: String },
    Approved { pending_id: u64, operator_id: String },
    Rejected { pending_id: u64, operator_id: String },
    DeliveryFailed {
        pending_id: u64,
        attempt: u32,
        error: String,
    },
    Posted {
        pending_id: u64,
        delivery: OutboxRecord,
    },
    ScannerToggled { enabled: bool },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Scanned { .. } => "scanned",
            EventKind::Filtered { .. } => "filtered",
            EventKind::Classified { .. } => "classified",
            EventKind::Matched { .. } => "matched",
            EventKind::Discarded { .. } => "discarded",
            EventKind::Approved { .. } => "approved",
            EventKind::Rejected { .. } => "rejected",
            EventKind::DeliveryFailed { .. } => "delivery_failed",
            EventKind::Posted { .. } => "posted",
            EventKind::ScannerToggled { .. } => "scanner_toggled",
        }
    }

    pub fn pending_id(&self) -> Option<u64> {
        match self {
            EventKind::Scanned { .. } | EventKind::ScannerToggled { .. } => None,
            EventKind::Filtered { pending_id, .. }
            | EventKind::Classified { pending_id, .. }
            | EventKind::Matched { pending_id, .. }
            | EventKind::Discarded { pending_id, .. }
            | EventKind::Approved { pending_id, .. }
            | EventKind::Rejected { pending_id, .. }
            | EventKind::DeliveryFailed { pending_id, .. }
            | EventKind::Posted { pending_id, .. } => Some(*pending_id),
        }
    }
}

impl AuditEvent {
    /// Copy with wall-clock fields zeroed, for comparing runs.
    pub fn without_timestamps(&self) -> AuditEvent {
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        let mut e = self.clone();
        e.at = epoch;
        if let EventKind::Posted { delivery, .. } = &mut e.kind {
            delivery.posted_at = epoch;
        }
        e
    }
}

/// Number of events of each kind, keyed by [`EventKind::name`].
pub fn count_kinds(events: &[AuditEvent]) -> std::collections::BTreeMap<&'static str, usize> {
    let mut m = std::collections::BTreeMap::new();
    for e in events {
        *m.entry(e.kind.name()).or_insert(0) += 1;
    }
    m
}
