use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use notobot_core::corpus::encode_corpus;
use notobot_core::models::{Checkpoint, ModelSpec};
use notobot_core::synth::{synthetic_corpus, synthetic_pool, CorpusMix};
use notobot_core::text::TextEncoder;
use notobot_pipeline::fixture::stream_fixture;
use notobot_pipeline::sink::{DeliverySink, WebhookSink};
use notobot_pipeline::source::{HttpPollingSource, SourceError, TweetSource};
use notobot_pipeline::{OutboxRecord, PipelineConfig};
use notobot_server::feed::feed_router;
use serde_json::Value;

async fn serve_router(app: Router) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

#[derive(Clone, Default)]
struct Hook {
    received: Arc<Mutex<Vec<OutboxRecord>>>,
    down: Arc<AtomicBool>,
}

async fn receive(State(hook): State<Hook>, Json(rec): Json<OutboxRecord>) -> StatusCode {
    if hook.down.load(Ordering::SeqCst) {
        return StatusCode::SERVICE_UNAVAILABLE;
    }
    hook.received.lock().unwrap().push(rec);
    StatusCode::NO_CONTENT
}

async fn webhook() -> (Hook, String) {
    let hook = Hook::default();
    let addr = serve_router(Router::new().route("/hook", post(receive)).with_state(hook.clone())).await;
    (hook, format!("http://{addr}/hook"))
}

#[tokio::test]
async fn polling_source_pages_through_feed() {
    let tweets = stream_fixture(23, 4);
    let addr = serve_router(feed_router(tweets.clone())).await;
    let mut src = HttpPollingSource::new(format!("http://{addr}/feed"), 10, Duration::from_secs(5));
    let mut got = Vec::new();
    let mut sizes = Vec::new();
    while !src.is_exhausted() {
        let batch = src.next_batch().await.unwrap();
        sizes.push(batch.len());
        got.extend(batch);
    }
    assert_eq!(sizes, vec![10, 10, 3]);
    assert_eq!(got, tweets);
    assert!(src.next_batch().await.unwrap().is_empty());
}

#[tokio::test]
async fn polling_source_reports_outage() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let mut src = HttpPollingSource::new(format!("http://{addr}/feed"), 5, Duration::from_secs(2));
    assert!(matches!(src.next_batch().await, Err(SourceError::Unavailable(_))));
    assert!(!src.is_exhausted());
}

#[tokio::test]
async fn webhook_sink_posts_records() {
    let (hook, url) = webhook().await;
    let mut sink = WebhookSink::new(url, Duration::from_secs(5));
    let rec = OutboxRecord {
        pending_id: 3,
        candidate_id: "c3".into(),
        message_id: "m1".into(),
        text: "@someone hello".into(),
        mentioned_user: "someone".into(),
        posted_at: chrono::DateTime::UNIX_EPOCH,
    };
    sink.deliver(&rec).await.unwrap();
    assert_eq!(*hook.received.lock().unwrap(), vec![rec.clone()]);
    hook.down.store(true, Ordering::SeqCst);
    assert!(sink.deliver(&rec).await.is_err());
    assert_eq!(hook.received.lock().unwrap().len(), 1);
}

pub fn write_checkpoint(path: &Path) {
    let encoder = TextEncoder::default();
    let data = encode_corpus(&synthetic_corpus(300, &CorpusMix::default(), 8), &encoder);
    let spec = ModelSpec::from_name("logreg").unwrap();
    let model = spec.train(&data, 8).unwrap();
    Checkpoint::new(&encoder, spec, model).save(path).unwrap();
}

/// Full stack from a config file: HTTP feed in, webhook out, API on top.
#[tokio::test]
async fn serve_with_http_source_and_webhook() {
    let dir = tempfile::tempdir().unwrap();
    write_checkpoint(&dir.path().join("model.json"));
    let pool: String = synthetic_pool(60, 2).iter().map(|m| serde_json::to_string(m).unwrap() + "\n").collect();
    std::fs::write(dir.path().join("pool.jsonl"), pool).unwrap();

    let feed = serve_router(feed_router(stream_fixture(50, 6))).await;
    let (hook, hook_url) = webhook().await;
    let cfg_text = format!(
        r#"
scan_interval_secs = 0.01
model_checkpoint_path = "model.json"
message_pool_path = "pool.jsonl"
state_log_path = "log.jsonl"

[source]
kind = "http"
url = "http://{feed}/feed"
batch_size = 8

[sink]
kind = "webhook"
url = "{hook_url}"

[retry]
base_delay_secs = 0.0
max_delay_secs = 0.0
"#
    );
    std::fs::write(dir.path().join("notobot.toml"), cfg_text).unwrap();
    let cfg = PipelineConfig::load(dir.path().join("notobot.toml")).unwrap();

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(notobot_server::cli::serve(cfg, listener, async {
        stop_rx.await.ok();
    }));

    let client = reqwest::Client::new();
    let get = |path: &str| {
        let req = client.get(format!("{base}{path}"));
        async move { req.send().await.unwrap().json::<Value>().await.unwrap() }
    };
    let deadline = Instant::now() + Duration::from_secs(20);
    let status = loop {
        let st = get("/status").await;
        if st["idle"] == true {
            break st;
        }
        assert!(Instant::now() < deadline, "pipeline never went idle: {st}");
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(status["model_loaded"], true);
    assert_eq!(status["scanned"], 50);

    let page = get("/candidates?status=awaiting_approval&limit=3").await;
    let ids: Vec<u64> = page["items"].as_array().unwrap().iter().map(|c| c["pending_id"].as_u64().unwrap()).collect();
    assert!(!ids.is_empty());
    for id in &ids {
        let resp = client.post(format!("{base}/candidates/{id}/approve")).send().await.unwrap();
        assert_eq!(resp.status(), 200);
        let body: Value = resp.json().await.unwrap();
        assert_eq!(body["status"], "posted");
    }
    let received = hook.received.lock().unwrap().clone();
    assert_eq!(received.iter().map(|r| r.pending_id).collect::<Vec<_>>(), ids);

    stop_tx.send(()).unwrap();
    tokio::time::timeout(Duration::from_secs(10), server).await.unwrap().unwrap().unwrap();
    let log = std::fs::read_to_string(dir.path().join("log.jsonl")).unwrap();
    let posted = log
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v["type"] == "event" && v["data"]["kind"] == "posted")
        .count();
    assert_eq!(posted, ids.len());
}
