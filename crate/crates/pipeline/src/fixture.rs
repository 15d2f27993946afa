//! Seeded stream fixtures for replay tests and demos.

use chrono::{DateTime, Duration, Utc};
use notobot_core::synth::{synthetic_author, synthetic_corpus, CorpusMix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::TweetRecord;

const CHATTER: [&str; 8] = [
    "coffee first then everything else",
    "traffic on the bridge again",
    "new episode tonight cannot wait",
    "rain all weekend apparently",
    "finally finished the puzzle",
    "who else is watching the game",
    "lunch was great today",
    "my dog learned a new trick",
];

const TOPIC_TAGS: [&str; 3] = ["tobacco", "nicotine", "cigarette"];

/// Start of the fixture timeline.
pub fn fixture_epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2019-06-01T00:00:00Z")
        .expect("valid timestamp")
        .with_timezone(&Utc)
}

/// `n` posts with unique ids `f{seed}-{i}`. About 15% are off-topic chatter
/// with no keyword; the rest are synthetic labeled texts, half of them
/// with a topic word appended so most pass the keyword filter.
pub fn stream_fixture(n: usize, seed: u64) -> Vec<TweetRecord> {
    let corpus = synthetic_corpus(n.max(10), &CorpusMix::default(), seed ^ 0xf1f1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let text = if rng.gen_bool(0.15) {
                CHATTER[rng.gen_range(0..CHATTER.len())].to_string()
            } else {
                let base = &corpus[i % corpus.len()].text;
                if rng.gen_bool(0.5) {
                    format!("{base} {}", TOPIC_TAGS[rng.gen_range(0..TOPIC_TAGS.len())])
                } else {
                    base.clone()
                }
            };
            TweetRecord {
                id: format!("f{seed}-{i:04}"),
                text,
                author: synthetic_author(&mut rng),
                created_at: fixture_epoch() + Duration::seconds(37 * i as i64),
                screen_name: format!("user_{seed}_{i:04}"),
            }
        })
        .collect()
}
