mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use notobot_pipeline::{funnel_is_ordered, PipelineState, Status};
use proptest::prelude::*;

const TEXTS: [&str; 4] = ["hookah p=0.9", "p=0.2 vape", "sunny day", "cigar p=0.5"];

#[derive(Debug, Clone)]
enum Op {
    Ingest(Vec<(u8, usize)>),
    Classify,
    Approve(u64),
    Reject(u64),
    Deliver(u64, bool),
    Scanner(bool),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        prop::collection::vec((0u8..24, 0usize..TEXTS.len()), 0..5).prop_map(Op::Ingest),
        Just(Op::Classify),
        (1u64..14).prop_map(Op::Approve),
        (1u64..14).prop_map(Op::Reject),
        ((1u64..14), any::<bool>()).prop_map(|(id, ok)| Op::Deliver(id, ok)),
        any::<bool>().prop_map(Op::Scanner),
    ]
}

/// Reference semantics, written independently of the pipeline.
#[derive(Default)]
struct Model {
    seen: BTreeSet<String>,
    status: BTreeMap<u64, Status>,
    text: BTreeMap<u64, &'static str>,
    next: u64,
}

impl Model {
    fn ingest(&mut self, batch: &[(u8, usize)]) {
        for &(id, t) in batch {
            let id = format!("t{id}");
            if !self.seen.insert(id) {
                continue;
            }
            if TEXTS[t] != "sunny day" {
                self.next += 1;
                self.status.insert(self.next, Status::AwaitingClassification);
                self.text.insert(self.next, TEXTS[t]);
            }
        }
    }

    fn classify(&mut self) {
        for (id, s) in self.status.iter_mut() {
            if *s == Status::AwaitingClassification {
                *s = if self.text[id].contains("p=0.2") { Status::Discarded } else { Status::AwaitingApproval };
            }
        }
    }

    fn step(&mut self, id: u64, from: Status, to: Status) -> bool {
        match self.status.get_mut(&id) {
            Some(s) if *s == from => {
                *s = to;
                true
            }
            _ => false,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_operation_sequences(ops in prop::collection::vec(op(), 1..40)) {
        let mut p = pipeline();
        let mut m = Model::default();
        for op in &ops {
            match op {
                Op::Ingest(batch) => {
                    let tweets = batch.iter().map(|&(id, t)| tweet(&format!("t{id}"), TEXTS[t])).collect();
                    p.ingest(tweets).unwrap();
                    m.ingest(batch);
                }
                Op::Classify => {
                    p.classify_pending().unwrap();
                    m.classify();
                }
                Op::Approve(id) => {
                    let ok = m.step(*id, Status::AwaitingApproval, Status::Approved);
                    prop_assert_eq!(p.approve(*id, "op").is_ok(), ok);
                }
                Op::Reject(id) => {
                    let ok = m.step(*id, Status::AwaitingApproval, Status::Rejected);
                    prop_assert_eq!(p.reject(*id, "op").is_ok(), ok);
                }
                Op::Deliver(id, success) => {
                    let approved = m.status.get(id) == Some(&Status::Approved);
                    let record = p.outbox_record(*id);
                    prop_assert_eq!(record.is_ok(), approved);
                    if let Ok(record) = record {
                        if *success {
                            p.record_posted(record).unwrap();
                            m.step(*id, Status::Approved, Status::Posted);
                        } else {
                            p.record_delivery_failure(*id, "injected".into()).unwrap();
                        }
                    }
                }
                Op::Scanner(on) => {
                    prop_assert_eq!(p.set_scanner(*on).unwrap(), *on);
                }
            }
            let live: BTreeMap<u64, Status> =
                p.state().candidates.iter().map(|(id, c)| (*id, c.status)).collect();
            prop_assert_eq!(&live, &m.status);
        }

        // Every recorded history walks legal edges with monotone stamps.
        for c in p.state().candidates.values() {
            prop_assert_eq!(c.history[0].status, Status::AwaitingClassification);
            for w in c.history.windows(2) {
                prop_assert!(w[0].status.can_become(w[1].status));
                prop_assert!(w[0].at <= w[1].at);
            }
        }

        // Folding the audit log from scratch reproduces the live state.
        let events = p.events().read().unwrap().clone();
        let mut replayed = PipelineState::new(true);
        for e in &events {
            replayed.apply(e).unwrap();
        }
        prop_assert_eq!(&replayed, p.state());
        prop_assert!(events.windows(2).all(|w| w[1].event_id == w[0].event_id + 1));
        prop_assert!(funnel_is_ordered(&events));
    }
}
