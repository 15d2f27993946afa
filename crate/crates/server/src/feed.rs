//! Mock feed service for the HTTP-polling source.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::routing::get;
use axum::{Json, Router};
use notobot_pipeline::source::FeedPage;
use notobot_pipeline::TweetRecord;

/// `GET /feed?cursor=N&limit=M` over a fixed list of posts.
pub fn feed_router(tweets: Vec<TweetRecord>) -> Router {
    Router::new().route("/feed", get(page)).with_state(Arc::new(tweets))
}

async fn page(State(tweets): State<Arc<Vec<TweetRecord>>>, Query(q): Query<HashMap<String, String>>) -> Json<FeedPage> {
    let num = |k: &str, d: usize| q.get(k).and_then(|v| v.parse().ok()).unwrap_or(d);
    let cursor = num("cursor", 0).min(tweets.len());
    let end = (cursor + num("limit", 20).max(1)).min(tweets.len());
    Json(FeedPage { tweets: tweets[cursor..end].to_vec(), next_cursor: end, exhausted: end == tweets.len() })
}
