use chrono::{DateTime, Utc};
use notobot_core::audience::{BinPathStep, InterventionMessage, UserMetadata};
use serde::{Deserialize, Serialize};

/// A post pulled from the stream together with its author profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub author: UserMetadata,
    pub created_at: DateTime<Utc>,
    /// Handle used when mentioning the author; optional in source files.
    #[serde(default)]
    pub screen_name: String,
}

impl TweetRecord {
    /// `screen_name`, or a stable placeholder derived from the post id.
    pub fn mention_handle(&self) -> String {
        if self.screen_name.is_empty() {
            format!("author_of_{}", self.id)
        } else {
            self.screen_name.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingClassification,
    AwaitingApproval,
    Approved,
    Rejected,
    Posted,
    Discarded,
}

impl Status {
    pub const ALL: [Status; 6] = [
        Status::AwaitingClassification,
        Status::AwaitingApproval,
        Status::Approved,
        Status::Rejected,
        Status::Posted,
        Status::Discarded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::AwaitingClassification => "awaiting_classification",
            Status::AwaitingApproval => "awaiting_approval",
            Status::Approved => "approved",
            Status::Rejected => "rejected",
            Status::Posted => "posted",
            Status::Discarded => "discarded",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        Status::ALL.into_iter().find(|st| st.as_str() == s)
    }

    /// Whether the state machine allows moving from `self` to `next`.
    pub fn can_become(self, next: Status) -> bool {
        use Status::*;
        matches!(
            (self, next),
            (AwaitingClassification, AwaitingApproval)
                | (AwaitingClassification, Discarded)
                | (AwaitingApproval, Approved)
                | (AwaitingApproval, Rejected)
                | (Approved, Posted)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Rejected | Status::Posted | Status::Discarded)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub status: Status,
    pub at: DateTime<Utc>,
    pub event_id: u64,
}

/// The intervention proposed for a classified candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedIntervention {
    pub bin_id: usize,
    pub bin_path: Vec<BinPathStep>,
    pub message: InterventionMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingIntervention {
    pub pending_id: u64,
    pub candidate: TweetRecord,
    pub matched_keywords: Vec<String>,
    pub confidence: Option<f64>,
    pub proposal: Option<ProposedIntervention>,
    pub status: Status,
    pub history: Vec<Transition>,
    pub operator_id: Option<String>,
    pub discard_reason: Option<String>,
    pub delivery_attempts: u32,
    pub last_delivery_error: Option<String>,
}

/// One delivered intervention, as written to the outbox.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutboxRecord {
    pub pending_id: u64,
    pub candidate_id: String,
    pub message_id: String,
    pub text: String,
    pub mentioned_user: String,
    pub posted_at: DateTime<Utc>,
}
