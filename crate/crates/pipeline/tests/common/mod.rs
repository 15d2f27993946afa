#![allow(dead_code)]

use std::sync::Arc;

use chrono::{DateTime, Utc};
use notobot_core::audience::{GroupConfig, GroupModel, UserMetadata};
use notobot_core::synth::synthetic_pool;
use notobot_core::text::KeywordSet;
use notobot_pipeline::engine::TextScorer;
use notobot_pipeline::{Pipeline, PipelineState, TweetRecord};

pub fn tweet(id: &str, text: &str) -> TweetRecord {
    TweetRecord {
        id: id.into(),
        text: text.into(),
        author: UserMetadata {
            created_at_mms: 40,
            favourites_count: 300,
            followers_count: 120,
            friends_count: 200,
            listed_count: 3,
            statuses_count: 2500,
            default_profile: true,
            default_profile_image: false,
            verified: false,
        },
        created_at: DateTime::<Utc>::UNIX_EPOCH,
        screen_name: format!("sn_{id}"),
    }
}

pub fn group_model() -> Arc<GroupModel> {
    Arc::new(GroupModel::build(&synthetic_pool(60, 0), &GroupConfig::default()).unwrap())
}

/// Confidence read off the text: "p=0.73 ..." gives 0.73, anything else 0.9.
pub fn parsed_scorer() -> Arc<dyn TextScorer> {
    Arc::new(|text: &str| {
        text.split_whitespace()
            .find_map(|w| w.strip_prefix("p=").and_then(|v| v.parse::<f64>().ok()))
            .unwrap_or(0.9)
    })
}

pub fn pipeline_with(scorer: Option<Arc<dyn TextScorer>>, threshold: f64) -> Pipeline {
    Pipeline::new(
        PipelineState::new(true),
        Vec::new(),
        None,
        KeywordSet::default_tobacco(),
        scorer,
        Some(group_model()),
        threshold,
    )
}

pub fn pipeline() -> Pipeline {
    pipeline_with(Some(parsed_scorer()), 0.5)
}
