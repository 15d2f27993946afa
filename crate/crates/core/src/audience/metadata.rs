use serde::{Deserialize, Serialize};

/// Profile features in canonical order.
pub const FEATURE_NAMES: [&str; 9] = [
    "created_at_mms",
    "favourites_count",
    "followers_count",
    "friends_count",
    "listed_count",
    "statuses_count",
    "default_profile",
    "default_profile_image",
    "verified",
];

/// Short labels shown at tree nodes, aligned with [`FEATURE_NAMES`].
pub const FEATURE_ABBREVIATIONS: [&str; 9] = ["A", "Fa", "Fl", "Fr", "Lc", "S", "P", "PI", "V"];

/// The first six features are counts; the last three are booleans.
pub const NUMERIC_FEATURES: usize = 6;

pub const N_FEATURES: usize = FEATURE_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct UserMetadata {
    /// Account age in months.
    pub created_at_mms: u64,
    pub favourites_count: u64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub listed_count: u64,
    pub statuses_count: u64,
    pub default_profile: bool,
    pub default_profile_image: bool,
    pub verified: bool,
}

impl UserMetadata {
    /// Feature vector in [`FEATURE_NAMES`] order; booleans become 0/1.
    pub fn to_features(&self) -> [f64; N_FEATURES] {
        [
            self.created_at_mms as f64,
            self.favourites_count as f64,
            self.followers_count as f64,
            self.friends_count as f64,
            self.listed_count as f64,
            self.statuses_count as f64,
            f64::from(u8::from(self.default_profile)),
            f64::from(u8::from(self.default_profile_image)),
            f64::from(u8::from(self.verified)),
        ]
    }

    pub fn is_boolean_feature(index: usize) -> bool {
        (NUMERIC_FEATURES..N_FEATURES).contains(&index)
    }
}

/// A former smoker's message that can be delivered as an intervention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionMessage {
    pub message_id: String,
    pub text: String,
    #[serde(default)]
    pub source_tag: String,
    pub author: UserMetadata,
    /// Set once the group tree has been built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_id: Option<usize>,
}

/// Reads a JSON-lines message pool; blank lines are skipped.
pub fn parse_message_pool(contents: &str) -> Result<Vec<InterventionMessage>, serde_json::Error> {
    contents
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
