//! Seeded synthetic data: labeled texts and intervention message pools.
//!
//! The labeled corpus mixes three kinds of examples:
//!
//! * order: a positive carries a target word and a companion word, a
//!   negative carries two decoys that recombine the same pieces around a
//!   shared pivot letter (`smoke jog` vs `smog joke`). Both classes have the
//!   same character-bigram multiset, so only character order separates them.
//! * pairing: two marker words; the label is set when exactly one of them
//!   occurs. Presence of either marker alone is uninformative.
//! * lexical: class-specific words.
//!
//! Letters of signal words are repeated at random (`smoooke`), with the same
//! distribution in both classes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audience::{InterventionMessage, UserMetadata};
use crate::corpus::LabeledText;

/// `(target, companion, decoy_a, decoy_b)`: swapping the suffixes after the
/// shared pivot letter turns the first pair into the second.
pub const ORDER_QUADS: [(&str, &str, &str, &str); 3] = [
    ("smoke", "jog", "smog", "joke"),
    ("vape", "cat", "vat", "cape"),
    ("puff", "bus", "pus", "buff"),
];

pub const PAIR_MARKERS: (&str, &str) = ("juul", "hazy");

pub const POSITIVE_WORDS: [&str; 4] = ["hookah", "cigar", "ecig", "blunt"];
pub const NEGATIVE_WORDS: [&str; 4] = ["quit", "clean", "healthy", "free"];

const FILLER: [&str; 24] = [
    "the", "a", "today", "with", "my", "friends", "after", "work", "love", "this", "so", "good",
    "weekend", "night", "again", "always", "really", "feel", "time", "new", "just", "got", "more",
    "when",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusMix {
    pub order: f64,
    pub pairing: f64,
    /// Probability that a signal letter is repeated; repeats add 1..=3
    /// copies.
    pub repeat_prob: f64,
}

impl Default for CorpusMix {
    fn default() -> Self {
        Self {
            order: 0.5,
            pairing: 0.25,
            repeat_prob: 0.15,
        }
    }
}

fn stretch(word: &str, p: f64, rng: &mut impl Rng) -> String {
    let mut out = String::with_capacity(word.len() + 4);
    for c in word.chars() {
        out.push(c);
        if rng.gen::<f64>() < p {
            for _ in 0..rng.gen_range(1..=3) {
                out.push(c);
            }
        }
    }
    out
}

fn assemble(signal: Vec<String>, rng: &mut impl Rng) -> String {
    let mut words = signal;
    for _ in 0..rng.gen_range(2..=4) {
        words.push(FILLER.choose(rng).expect("non-empty").to_string());
    }
    words.shuffle(rng);
    words.join(" ")
}

fn one_text(label: u8, mix: &CorpusMix, rng: &mut impl Rng) -> String {
    let p = mix.repeat_prob;
    let u: f64 = rng.gen();
    if u < mix.order {
        let (t, c, d1, d2) = *ORDER_QUADS.choose(rng).expect("non-empty");
        let pair = if label == 1 { [t, c] } else { [d1, d2] };
        assemble(pair.iter().map(|w| stretch(w, p, rng)).collect(), rng)
    } else if u < mix.order + mix.pairing {
        let (a, b) = PAIR_MARKERS;
        if label == 1 {
            let w = if rng.gen() { a } else { b };
            assemble(vec![w.to_string()], rng)
        } else if rng.gen() {
            assemble(Vec::new(), rng)
        } else {
            // Both markers, adjacent.
            assemble(vec![format!("{a} {b}")], rng)
        }
    } else {
        let pool = if label == 1 { POSITIVE_WORDS } else { NEGATIVE_WORDS };
        let w = pool.choose(rng).expect("non-empty");
        assemble(vec![stretch(w, p, rng)], rng)
    }
}

/// `n` balanced labeled texts (labels alternate, then the order is shuffled).
pub fn synthetic_corpus(n: usize, mix: &CorpusMix, seed: u64) -> Vec<LabeledText> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<LabeledText> = (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            LabeledText {
                id: format!("s{i}"),
                text: one_text(label, mix, &mut rng),
                label,
            }
        })
        .collect();
    items.shuffle(&mut rng);
    items
}

const CESSATION_LINES: [&str; 8] = [
    "One year smoke free and I can finally run a 5k",
    "Quitting was the hardest and best thing I ever did",
    "Day 30 without a cigarette, my taste is coming back",
    "If I could quit after 20 years, so can you",
    "Saved enough from not buying packs to take a trip",
    "Cravings pass in a few minutes, hang in there",
    "My kids do not have to breathe my smoke anymore",
    "Nicotine gum helped me through the first weeks",
];

fn jitter(rng: &mut impl Rng, base: f64) -> u64 {
    (base * rng.gen_range(0.6..1.4)).round().max(0.0) as u64
}

fn archetype_author(rng: &mut impl Rng) -> UserMetadata {
    // A few loose archetypes so that per-feature clusters exist.
    let scale = [5.0, 80.0, 2_000.0][rng.gen_range(0..3)];
    let age = [6, 36, 96][rng.gen_range(0..3)] + rng.gen_range(0..6);
    let network = [50.0, 400.0][rng.gen_range(0..2)];
    UserMetadata {
        created_at_mms: age,
        favourites_count: jitter(rng, scale * 4.0),
        followers_count: jitter(rng, scale * 3.0),
        friends_count: jitter(rng, network),
        listed_count: jitter(rng, scale / 10.0),
        statuses_count: jitter(rng, scale * 20.0),
        default_profile: rng.gen_bool(0.5),
        default_profile_image: rng.gen_bool(0.1),
        verified: rng.gen_bool(0.05),
    }
}

/// A pool of `n` messages with loosely clustered author metadata.
pub fn synthetic_pool(n: usize, seed: u64) -> Vec<InterventionMessage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| InterventionMessage {
            message_id: format!("msg-{i:04}"),
            text: CESSATION_LINES[rng.gen_range(0..CESSATION_LINES.len())].to_string(),
            source_tag: "#iquitsmoking".into(),
            author: archetype_author(&mut rng),
            bin_id: None,
        })
        .collect()
}

/// Random profile in the same ranges as [`synthetic_pool`] authors.
pub fn synthetic_author(rng: &mut impl Rng) -> UserMetadata {
    archetype_author(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn bigrams(s: &str) -> HashMap<(char, char), usize> {
        let padded = format!(" {s} ");
        let chars: Vec<char> = padded.chars().collect();
        let mut m = HashMap::new();
        for w in chars.windows(2) {
            *m.entry((w[0], w[1])).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn order_quads_share_bigrams() {
        for (t, c, d1, d2) in ORDER_QUADS {
            assert_eq!(bigrams(&format!("{t} {c}")), bigrams(&format!("{d2} {d1}")), "{t}");
            let mut pos: Vec<char> = format!("{t}{c}").chars().collect();
            let mut neg: Vec<char> = format!("{d1}{d2}").chars().collect();
            pos.sort();
            neg.sort();
            assert_eq!(pos, neg);
        }
    }

    #[test]
    fn corpus_is_balanced_and_seeded() {
        let a = synthetic_corpus(200, &CorpusMix::default(), 4);
        assert_eq!(a.iter().filter(|t| t.label == 1).count(), 100);
        assert_eq!(a, synthetic_corpus(200, &CorpusMix::default(), 4));
        assert_ne!(a, synthetic_corpus(200, &CorpusMix::default(), 5));
        assert!(a.iter().all(|t| !t.text.is_empty() && t.text.len() < 120));
    }

    #[test]
    fn pool_is_seeded() {
        let p = synthetic_pool(30, 1);
        assert_eq!(p.len(), 30);
        assert_eq!(p, synthetic_pool(30, 1));
        assert!(p.iter().all(|m| m.bin_id.is_none()));
    }
}
