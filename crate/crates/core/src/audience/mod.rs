//! Matching a target profile to a peer-authored intervention message.
//!
//! Message authors are clustered one feature at a time, users with equal
//! cluster tuples form a group, and a Gini tree over the raw metadata
//! turns the groups into bins that any profile can be routed to.

mod group;
mod kmeans;
mod metadata;

pub use group::{
    cluster_feature, group_users, select_representative, Bin, BinPathStep, ClusterMethod,
    FeatureClustering, GroupConfig, GroupInfo, GroupModel, GROUP_MODEL_VERSION,
};
pub use kmeans::{kmeans_1d, select_k, silhouette, KMeansFit, KSelection, MAX_ITERATIONS};
pub use metadata::{
    parse_message_pool, InterventionMessage, UserMetadata, FEATURE_ABBREVIATIONS, FEATURE_NAMES,
    NUMERIC_FEATURES, N_FEATURES,
};

use crate::models::ModelError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AudienceError {
    #[error("k = {k} needs at least {k} distinct values, found {distinct}")]
    TooFewDistinctValues { k: usize, distinct: usize },
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("k range {lo}..={hi} must lie within 2..=8")]
    InvalidRange { lo: usize, hi: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("{values} values but {assignments} assignments")]
    LengthMismatch { values: usize, assignments: usize },
    #[error("values must be finite")]
    NonFinite,
    #[error("user {user} has {actual} cluster ids, expected {expected}")]
    MissingFeature {
        user: usize,
        expected: usize,
        actual: usize,
    },
    #[error("all authors fall into one group; nothing to split")]
    SingleGroup,
    #[error("bin has no members")]
    EmptyBin,
    #[error("message pool is empty")]
    EmptyPool,
    #[error("group tree: {0}")]
    Tree(#[from] ModelError),
    #[error("unsupported group model version {0}")]
    Version(u32),
    #[error("group model json: {0}")]
    Json(String),
    #[error("group model i/o: {0}")]
    Io(String),
}

impl From<serde_json::Error> for AudienceError {
    fn from(e: serde_json::Error) -> Self {
        Self::Json(e.to_string())
    }
}
