#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use notobot_core::audience::{GroupConfig, GroupModel, UserMetadata};
use notobot_core::synth::synthetic_pool;
use notobot_core::text::KeywordSet;
use notobot_pipeline::config::RetryConfig;
use notobot_pipeline::sink::MemorySink;
use notobot_pipeline::source::MemorySource;
use notobot_pipeline::{spawn, Pipeline, PipelineHandle, PipelineState, RunnerOptions, TweetRecord};
use notobot_server::{router, ApiError, AppState};
use serde_json::Value;

pub struct TestServer {
    pub base: String,
    pub client: reqwest::Client,
    pub pipeline: PipelineHandle,
    pub source: MemorySource,
    pub sink: MemorySink,
}

pub fn tweet(id: &str, text: &str) -> TweetRecord {
    TweetRecord {
        id: id.into(),
        text: text.into(),
        author: UserMetadata {
            created_at_mms: 30,
            favourites_count: 500,
            followers_count: 150,
            friends_count: 220,
            listed_count: 2,
            statuses_count: 4000,
            default_profile: false,
            default_profile_image: false,
            verified: false,
        },
        created_at: DateTime::<Utc>::UNIX_EPOCH,
        screen_name: format!("sn_{id}"),
    }
}

pub struct Options {
    pub with_matcher: bool,
    pub ui_dir: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Self { with_matcher: true, ui_dir: None }
    }
}

/// Server on an ephemeral port; ticks only when the test calls `tick`.
/// Texts containing "p=0.1" score 0.1, everything else 0.8.
pub async fn start(opts: Options) -> TestServer {
    let matcher = opts
        .with_matcher
        .then(|| Arc::new(GroupModel::build(&synthetic_pool(80, 5), &GroupConfig::default()).unwrap()));
    let pipeline = Pipeline::new(
        PipelineState::new(true),
        Vec::new(),
        None,
        KeywordSet::default_tobacco(),
        Some(Arc::new(|t: &str| if t.contains("p=0.1") { 0.1 } else { 0.8 })),
        matcher,
        0.5,
    );
    let source = MemorySource::new();
    let sink = MemorySink::new();
    let options = RunnerOptions {
        scan_interval: Duration::from_millis(10),
        retry: RetryConfig { base_delay_secs: 0.0, max_delay_secs: 0.0 },
        timer: false,
    };
    let (handle, _task) = spawn(pipeline, Box::new(source.clone()), Box::new(sink.clone()), options);
    let app = router(AppState { pipeline: handle.clone() }, opts.ui_dir);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    TestServer {
        base: format!("http://{addr}"),
        client: reqwest::Client::new(),
        pipeline: handle,
        source,
        sink,
    }
}

impl TestServer {
    pub async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        decode(resp).await
    }

    pub async fn post(&self, path: &str, body: &str) -> (u16, Value) {
        let resp = self
            .client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .await
            .unwrap();
        decode(resp).await
    }

    /// Pushes a batch and runs one tick.
    pub async fn feed(&self, batch: Vec<TweetRecord>) {
        self.source.push_batch(batch);
        self.pipeline.tick().await.unwrap();
    }
}

async fn decode(resp: reqwest::Response) -> (u16, Value) {
    let status = resp.status().as_u16();
    let bytes = resp.bytes().await.unwrap();
    let v: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    if status >= 300 {
        let err: ApiError = serde_json::from_value(v.clone()).expect("error body is an ApiError");
        assert_eq!(
            v.as_object().unwrap().keys().cloned().collect::<Vec<_>>(),
            vec!["code", "details", "message"],
            "error body has exactly the three fields"
        );
        assert!(!err.code.is_empty());
    }
    (status, v)
}

/// Parse as `T` and re-serialize; the JSON must be unchanged.
pub fn assert_roundtrip<T: serde::de::DeserializeOwned + serde::Serialize>(v: &Value) -> T {
    let typed: T = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(&serde_json::to_value(&typed).unwrap(), v);
    typed
}
