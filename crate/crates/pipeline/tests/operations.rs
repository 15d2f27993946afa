mod common;

use common::*;
use notobot_pipeline::engine::{REASON_BELOW_THRESHOLD, REASON_NO_MATCHER};
use notobot_pipeline::{EventKind, Pipeline, PipelineError, PipelineState, Status};

fn statuses(p: &Pipeline) -> Vec<Status> {
    p.state().candidates.values().map(|c| c.status).collect()
}

#[test]
fn scan_keeps_keyword_hits_only() {
    let mut p = pipeline();
    let r = p
        .ingest(vec![
            tweet("a", "lovely morning walk"),
            tweet("b", "hookah lounge tonight"),
            tweet("c", "new phone who dis"),
        ])
        .unwrap();
    assert_eq!((r.scanned, r.filtered), (3, 1));
    let c = &p.state().candidates[&1];
    assert_eq!(c.candidate.id, "b");
    assert_eq!(c.matched_keywords, vec!["hookah"]);
    assert_eq!(c.status, Status::AwaitingClassification);
}

#[test]
fn duplicates_and_empty_batches() {
    let mut p = pipeline();
    p.ingest(vec![tweet("a", "vape shop")]).unwrap();
    let before = p.state().clone();
    let r = p.ingest(vec![tweet("a", "vape shop")]).unwrap();
    assert_eq!(r.duplicates, 1);
    assert_eq!(p.state(), &before);
    p.ingest(vec![]).unwrap();
    assert_eq!(p.state(), &before);
    // Whitespace-only text is not scanned.
    let r = p.ingest(vec![tweet("z", "   ")]).unwrap();
    assert_eq!(r.skipped_empty, 1);
    assert_eq!(p.state(), &before);
}

#[test]
fn threshold_rule() {
    let mut p = pipeline();
    p.ingest(vec![tweet("a", "p=0.4 cigar"), tweet("b", "p=0.5 cigar"), tweet("c", "p=0.97 cigar")])
        .unwrap();
    let r = p.classify_pending().unwrap();
    assert_eq!((r.matched, r.discarded), (2, 1));
    assert_eq!(statuses(&p), vec![Status::Discarded, Status::AwaitingApproval, Status::AwaitingApproval]);
    let a = &p.state().candidates[&1];
    assert_eq!(a.confidence, Some(0.4));
    assert_eq!(a.discard_reason.as_deref(), Some(REASON_BELOW_THRESHOLD));

    let mut strict = pipeline_with(Some(parsed_scorer()), 0.95);
    strict
        .ingest(vec![tweet("a", "p=0.94 cigar"), tweet("b", "p=0.95 cigar"), tweet("c", "p=0.99 cigar")])
        .unwrap();
    strict.classify_pending().unwrap();
    assert_eq!(statuses(&strict), vec![Status::Discarded, Status::AwaitingApproval, Status::AwaitingApproval]);
}

#[test]
fn matched_candidate_carries_route_and_message() {
    let mut p = pipeline();
    p.ingest(vec![tweet("a", "juul pods")]).unwrap();
    p.classify_pending().unwrap();
    let c = &p.state().candidates[&1];
    let proposal = c.proposal.as_ref().unwrap();
    let gm = p.matcher().unwrap();
    let (bin, path) = gm.route(&c.candidate.author);
    assert_eq!(proposal.bin_id, bin);
    assert_eq!(proposal.bin_path, path);
    assert_eq!(proposal.message, *gm.representative(bin).unwrap());
    assert!(!proposal.bin_path.is_empty());
}

#[test]
fn missing_model_leaves_candidates_waiting() {
    let mut p = pipeline_with(None, 0.5);
    p.ingest(vec![tweet("a", "blunt")]).unwrap();
    assert!(matches!(p.classify_pending(), Err(PipelineError::ModelNotLoaded)));
    assert_eq!(statuses(&p), vec![Status::AwaitingClassification]);
}

#[test]
fn missing_pool_discards_with_reason() {
    let mut p = Pipeline::new(
        PipelineState::new(true),
        vec![],
        None,
        notobot_core::text::KeywordSet::default_tobacco(),
        Some(parsed_scorer()),
        None,
        0.5,
    );
    p.ingest(vec![tweet("a", "blunt")]).unwrap();
    p.classify_pending().unwrap();
    let c = &p.state().candidates[&1];
    assert_eq!(c.status, Status::Discarded);
    assert_eq!(c.discard_reason.as_deref(), Some(REASON_NO_MATCHER));
}

#[test]
fn non_finite_scores_are_discarded() {
    let mut p = pipeline_with(Some(std::sync::Arc::new(|_: &str| f64::NAN)), 0.5);
    p.ingest(vec![tweet("a", "blunt")]).unwrap();
    p.classify_pending().unwrap();
    assert_eq!(statuses(&p), vec![Status::Discarded]);
    assert!(p.state().candidates[&1].confidence.is_none());
}

#[test]
fn approve_reject_rules() {
    let mut p = pipeline();
    p.ingest(vec![tweet("a", "ecig"), tweet("b", "ecig"), tweet("c", "ecig")]).unwrap();
    // Not yet classified.
    assert!(matches!(p.approve(1, "op"), Err(PipelineError::InvalidTransition { .. })));
    p.classify_pending().unwrap();

    p.reject(1, "op").unwrap();
    assert!(matches!(p.reject(1, "op"), Err(PipelineError::InvalidTransition { .. })));
    assert!(matches!(p.approve(1, "op"), Err(PipelineError::InvalidTransition { .. })));

    p.approve(2, "alice").unwrap();
    assert!(matches!(p.approve(2, "alice"), Err(PipelineError::InvalidTransition { .. })));
    assert!(matches!(p.reject(2, "alice"), Err(PipelineError::InvalidTransition { .. })));
    assert_eq!(p.state().candidates[&2].operator_id.as_deref(), Some("alice"));

    assert!(matches!(p.approve(99, "op"), Err(PipelineError::NotFound(99))));

    let record = p.outbox_record(2).unwrap();
    assert_eq!(record.mentioned_user, "sn_b");
    assert!(record.text.starts_with("@sn_b "));
    assert_eq!(p.record_delivery_failure(2, "down".into()).unwrap(), 1);
    assert_eq!(p.record_delivery_failure(2, "down".into()).unwrap(), 2);
    p.record_posted(record).unwrap();
    let c = &p.state().candidates[&2];
    assert_eq!(c.status, Status::Posted);
    assert_eq!(c.delivery_attempts, 3);
    let kinds: Vec<_> = c.history.iter().map(|t| t.status).collect();
    assert_eq!(
        kinds,
        vec![Status::AwaitingClassification, Status::AwaitingApproval, Status::Approved, Status::Posted]
    );
    assert!(c.history.windows(2).all(|w| w[0].at <= w[1].at && w[0].event_id < w[1].event_id));
    // Posting twice is impossible.
    assert!(p.outbox_record(2).is_err());
}

#[test]
fn scanner_toggle_is_idempotent() {
    let mut p = pipeline();
    assert!(p.set_scanner(true).unwrap());
    assert_eq!(p.state().last_event_id, 0);
    assert!(!p.set_scanner(false).unwrap());
    assert!(!p.set_scanner(false).unwrap());
    assert!(p.set_scanner(true).unwrap());
    let toggles = p
        .events()
        .read()
        .unwrap()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ScannerToggled { .. }))
        .count();
    assert_eq!(toggles, 2);
}

#[test]
fn every_candidate_is_scanned_first() {
    let mut p = pipeline();
    p.ingest(vec![tweet("a", "cigar"), tweet("b", "p=0.1 cigar"), tweet("c", "fresh air")]).unwrap();
    p.classify_pending().unwrap();
    p.approve(1, "op").unwrap();
    let events = p.events().read().unwrap().clone();
    for c in p.state().candidates.values() {
        let first_scan = events
            .iter()
            .position(|e| matches!(&e.kind, EventKind::Scanned { tweet_id } if *tweet_id == c.candidate.id))
            .unwrap();
        let first_other = events.iter().position(|e| e.kind.pending_id() == Some(c.pending_id)).unwrap();
        assert!(first_scan < first_other);
    }
}
