mod support;

use std::collections::BTreeSet;

use egoauth_authsvc::events::{Event, JsonlLog};
use egoauth_authsvc::wire::{AnswerOutcome, AnswerRequest, LoginResponse};
use egoauth_authsvc::{
    AuthService, LockoutPolicy, OnExceed, ServiceConfig, ServiceError, SessionState,
};
use egoauth_core::challenges::{Challenge, ChallengeFormat, GroundTruth};
use uuid::Uuid;

use support::{harness, Harness, CREDENTIAL};

fn paired(h: &Harness, device: &str) -> String {
    h.svc.pair(device, CREDENTIAL).unwrap().shared_secret
}

fn login(h: &Harness, device: &str, secret: &str, format: ChallengeFormat) -> Uuid {
    match h.svc.request_login(device, secret, format, None).unwrap() {
        LoginResponse::Challenge { session_id, .. } => session_id,
        other => panic!("expected a challenge, got {other:?}"),
    }
}

fn right(c: &Challenge) -> AnswerRequest {
    let mut req = AnswerRequest {
        challenge_id: c.challenge_id,
        ..Default::default()
    };
    match &c.ground_truth {
        GroundTruth::Order(o) => req.order = Some(o.clone()),
        GroundTruth::ValidSlots(v) => req.selected = Some(v.iter().copied().collect()),
    }
    req
}

fn wrong(c: &Challenge) -> AnswerRequest {
    let mut req = right(c);
    if let Some(o) = &mut req.order {
        o.swap(0, 1);
    }
    if let Some(s) = &mut req.selected {
        // Flip slot 0.
        if s.first() == Some(&0) {
            s.remove(0);
        } else {
            s.insert(0, 0);
        }
    }
    req
}

fn submit(h: &Harness, device: &str, secret: &str, session: Uuid, mut req: AnswerRequest) -> egoauth_authsvc::Result<egoauth_authsvc::wire::AnswerResponse> {
    req.session_id = session;
    h.svc.submit_answer(device, secret, &req)
}

#[test]
fn pairing_rules() {
    let h = harness(ServiceConfig::default());
    let rec = h.svc.pair("cam-1", CREDENTIAL).unwrap();
    assert_eq!(rec.shared_secret.len(), 64);
    assert!(matches!(h.svc.pair("cam-1", CREDENTIAL), Err(ServiceError::Conflict(_))));
    assert!(matches!(h.svc.pair("cam-2", "guess"), Err(ServiceError::Auth)));
    assert!(matches!(
        h.svc.request_login("cam-1", "not-the-secret", ChallengeFormat::Arrangement, None),
        Err(ServiceError::Auth)
    ));
    assert!(matches!(
        h.svc.request_login("cam-9", &rec.shared_secret, ChallengeFormat::Arrangement, None),
        Err(ServiceError::Auth)
    ));
}

#[test]
fn login_issues_four_image_arrangement() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let resp = h.svc.request_login("cam", &secret, ChallengeFormat::Arrangement, None).unwrap();
    let LoginResponse::Challenge { session_id, challenge } = resp else { panic!() };
    assert_eq!(challenge.n, 4);
    assert_eq!(challenge.images.len(), 4);
    let rec = h.svc.session_metrics("cam", &secret, session_id).unwrap();
    assert_eq!(rec.state, SessionState::Challenged);
    assert_eq!(rec.attempts, 0);
    assert_eq!(rec.challenge_history, vec![challenge.challenge_id]);
}

#[test]
fn degenerate_corpus_requires_fallback_without_a_session() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    for format in [ChallengeFormat::Arrangement, ChallengeFormat::Selection] {
        let resp = h.svc.request_login("cam", &secret, format, Some("flat")).unwrap();
        assert!(matches!(resp, LoginResponse::FallbackRequired { .. }), "{resp:?}");
    }
    assert!(h.svc.records().is_empty());
    assert!(h.log.events().iter().any(|e| matches!(e, Event::FallbackRequired { .. })));
    assert!(matches!(
        h.svc.request_login("cam", &secret, ChallengeFormat::Arrangement, Some("missing")),
        Err(ServiceError::NotFound(_))
    ));
}

#[test]
fn correct_first_answer_in_3_8_seconds() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    // Images take 250 ms to appear; entry time starts then.
    h.clock.advance(250);
    h.svc.rendered("cam", &secret, s, c.challenge_id).unwrap();
    h.clock.advance(3_800);
    let resp = submit(&h, "cam", &secret, s, right(&c)).unwrap();
    assert_eq!(resp.outcome, AnswerOutcome::Accepted);
    assert!(resp.challenge.is_none());
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.state, SessionState::Succeeded);
    assert_eq!(rec.attempts, 1);
    assert_eq!(rec.entry_time_ms, Some(3_800));
}

#[test]
fn entry_time_falls_back_to_send_time_without_beacon() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    h.clock.advance(4_050);
    submit(&h, "cam", &secret, s, right(&c)).unwrap();
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.entry_time_ms, Some(4_050));
}

#[test]
fn wrong_arrangement_brings_new_images() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let mut prev = h.svc.simulation_peek(s).unwrap();
    for attempt in 1..=5u32 {
        let resp = submit(&h, "cam", &secret, s, wrong(&prev)).unwrap();
        assert_eq!(resp.outcome, AnswerOutcome::RetryWithNewChallenge);
        assert_eq!(resp.attempts, attempt);
        let view = resp.challenge.unwrap();
        assert_ne!(view.challenge_id, prev.challenge_id);
        let next = h.svc.simulation_peek(s).unwrap();
        assert_eq!(next.challenge_id, view.challenge_id);
        let ids = |c: &Challenge| c.images.iter().map(|i| i.frame_id).collect::<BTreeSet<_>>();
        assert_ne!(ids(&prev), ids(&next), "six candidates leave room for fresh images");
        prev = next;
    }
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.challenge_history.len(), 6);
    assert_eq!(rec.state, SessionState::Challenged);
    // The old challenge is stale now.
    let stale = AnswerRequest { challenge_id: rec.challenge_history[0], order: Some(vec![0, 1, 2, 3]), ..Default::default() };
    assert!(matches!(submit(&h, "cam", &secret, s, stale), Err(ServiceError::Session { .. })));
}

#[test]
fn wrong_selection_keeps_the_challenge_and_counts_clicks() {
    let h = harness(ServiceConfig { force_length: Some(8), ..Default::default() });
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Selection);
    let c = h.svc.simulation_peek(s).unwrap();
    assert_eq!(c.n, 8);
    let k = c.k.unwrap();
    let mut bad = wrong(&c);
    bad.click_count = 3;
    let resp = submit(&h, "cam", &secret, s, bad).unwrap();
    assert_eq!(resp.outcome, AnswerOutcome::RetrySameChallenge);
    assert!(resp.challenge.is_none());
    assert_eq!(h.svc.simulation_peek(s).unwrap().challenge_id, c.challenge_id);
    let mut good = right(&c);
    good.click_count = k as u32;
    assert_eq!(submit(&h, "cam", &secret, s, good).unwrap().outcome, AnswerOutcome::Accepted);
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.attempts, 2);
    assert_eq!(rec.clicks, 3 + k as u64);
    assert!(rec.clicks >= k as u64);
    assert_eq!(rec.challenge_history.len(), 1);
}

#[test]
fn lockout_fires_at_max_attempts_plus_one() {
    let h = harness(ServiceConfig {
        lockout: LockoutPolicy { max_attempts: 10, ..Default::default() },
        ..Default::default()
    });
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let mut locked_at = None;
    for attempt in 1..=25u32 {
        let c = h.svc.simulation_peek(s).unwrap();
        match submit(&h, "cam", &secret, s, wrong(&c)) {
            Ok(resp) if resp.outcome == AnswerOutcome::LockedOut => {
                locked_at = Some(attempt);
                assert_eq!(resp.attempts, attempt);
            }
            Ok(resp) => assert_eq!(resp.outcome, AnswerOutcome::RetryWithNewChallenge),
            Err(ServiceError::Session { .. }) => assert!(locked_at.is_some()),
            Err(e) => panic!("{e}"),
        }
    }
    assert_eq!(locked_at, Some(11));
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.state, SessionState::LockedOut);
    assert_eq!(rec.attempts, 11);
}

#[test]
fn correct_answer_after_the_limit_still_locks() {
    let h = harness(ServiceConfig {
        lockout: LockoutPolicy { max_attempts: 2, ..Default::default() },
        ..Default::default()
    });
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    for _ in 0..2 {
        let c = h.svc.simulation_peek(s).unwrap();
        submit(&h, "cam", &secret, s, wrong(&c)).unwrap();
    }
    let c = h.svc.simulation_peek(s).unwrap();
    assert_eq!(submit(&h, "cam", &secret, s, right(&c)).unwrap().outcome, AnswerOutcome::LockedOut);
}

#[test]
fn slow_entry_falls_back_when_configured() {
    let h = harness(ServiceConfig {
        lockout: LockoutPolicy { max_attempts: 10, max_entry_time_ms: 60_000, on_exceed: OnExceed::Fallback },
        ..Default::default()
    });
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    h.clock.advance(60_001);
    let resp = submit(&h, "cam", &secret, s, right(&c)).unwrap();
    assert_eq!(resp.outcome, AnswerOutcome::Fallback);
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.state, SessionState::Fallback);
    assert_eq!(rec.ended_at_ms, Some(1_000_000 + 60_001));
}

#[test]
fn malformed_answers_do_not_count() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    let bad_orders = [vec![0, 0, 1, 2], vec![0, 1, 2], vec![0, 1, 2, 9]];
    for order in bad_orders {
        let req = AnswerRequest { challenge_id: c.challenge_id, order: Some(order), ..Default::default() };
        assert!(matches!(submit(&h, "cam", &secret, s, req), Err(ServiceError::InvalidAnswer(_))));
    }
    let wrong_kind = AnswerRequest { challenge_id: c.challenge_id, selected: Some(vec![1]), ..Default::default() };
    assert!(matches!(submit(&h, "cam", &secret, s, wrong_kind), Err(ServiceError::InvalidAnswer(_))));
    let rec = h.svc.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.attempts, 0);
    assert_eq!(rec.state, SessionState::Challenged);

    let sel = login(&h, "cam", &secret, ChallengeFormat::Selection);
    let c = h.svc.simulation_peek(sel).unwrap();
    for selected in [vec![0, 0], vec![c.n]] {
        let req = AnswerRequest { challenge_id: c.challenge_id, selected: Some(selected), ..Default::default() };
        assert!(matches!(submit(&h, "cam", &secret, sel, req), Err(ServiceError::InvalidAnswer(_))));
    }
    assert_eq!(h.svc.session_metrics("cam", &secret, sel).unwrap().attempts, 0);
}

#[test]
fn duplicate_submission_counts_once() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    let mut req = wrong(&c);
    req.idempotency_key = Some("tap-1".into());
    let first = submit(&h, "cam", &secret, s, req.clone()).unwrap();
    let again = submit(&h, "cam", &secret, s, req).unwrap();
    assert_eq!(first, again);
    assert_eq!(h.svc.session_metrics("cam", &secret, s).unwrap().attempts, 1);
}

#[test]
fn terminal_states_are_final() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    submit(&h, "cam", &secret, s, right(&c)).unwrap();
    assert!(matches!(submit(&h, "cam", &secret, s, right(&c)), Err(ServiceError::Session { .. })));
    assert!(matches!(h.svc.rendered("cam", &secret, s, c.challenge_id), Err(ServiceError::Session { .. })));
    assert_eq!(h.svc.session_metrics("cam", &secret, s).unwrap().state, SessionState::Succeeded);
}

#[test]
fn sessions_belong_to_their_device() {
    let h = harness(ServiceConfig::default());
    let a = paired(&h, "cam-a");
    let b = paired(&h, "cam-b");
    let s = login(&h, "cam-a", &a, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    assert!(matches!(submit(&h, "cam-b", &b, s, right(&c)), Err(ServiceError::NotFound(_))));
    assert!(matches!(h.svc.session_metrics("cam-b", &b, s), Err(ServiceError::NotFound(_))));
    assert!(matches!(h.svc.session_metrics("cam-a", &a, Uuid::nil()), Err(ServiceError::NotFound(_))));
}

#[test]
fn legitimate_sessions_average_one_attempt() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    for format in [ChallengeFormat::Arrangement, ChallengeFormat::Selection] {
        for _ in 0..20 {
            let s = login(&h, "cam", &secret, format);
            h.clock.advance(2_000);
            let c = h.svc.simulation_peek(s).unwrap();
            submit(&h, "cam", &secret, s, right(&c)).unwrap();
        }
    }
    let m = h.svc.metrics();
    for f in [&m.arrangement, &m.selection] {
        assert_eq!(f.succeeded, 20);
        let attempts = f.attempts.as_ref().unwrap();
        assert_eq!((attempts.mean, attempts.std), (1.0, 0.0));
        assert_eq!(f.entry_time_s.as_ref().unwrap().display, "2.00 (0.00)");
    }
}

#[test]
fn snapshot_restores_an_open_session() {
    let h = harness(ServiceConfig::default());
    let secret = paired(&h, "cam");
    let s = login(&h, "cam", &secret, ChallengeFormat::Arrangement);
    let c = h.svc.simulation_peek(s).unwrap();
    submit(&h, "cam", &secret, s, wrong(&c)).unwrap();
    let path = h.dir.path().join("snapshot.json");
    h.svc.save_snapshot(&path).unwrap();

    let fresh = AuthService::new(ServiceConfig::default(), std::sync::Arc::new(h.clock.clone()), std::sync::Arc::new(egoauth_authsvc::events::NullLog)).unwrap();
    fresh.add_corpus("default", support::manifest(h.dir.path()).into());
    fresh.load_snapshot(&path).unwrap();
    let rec = fresh.session_metrics("cam", &secret, s).unwrap();
    assert_eq!(rec.attempts, 1);
    let c = fresh.simulation_peek(s).unwrap();
    let mut req = right(&c);
    req.session_id = s;
    assert_eq!(fresh.submit_answer("cam", &secret, &req).unwrap().outcome, AnswerOutcome::Accepted);
    assert!(matches!(fresh.pair("cam", CREDENTIAL), Err(ServiceError::Conflict(_))));
}

#[test]
fn event_log_records_every_decision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let log = std::sync::Arc::new(JsonlLog::open(&path).unwrap());
    let clock = egoauth_authsvc::ManualClock::new(5);
    let svc = AuthService::new(ServiceConfig { rng_seed: Some(1), ..Default::default() }, std::sync::Arc::new(clock), log).unwrap();
    svc.add_corpus("default", support::manifest(dir.path()).into());
    let secret = svc.pair("cam", CREDENTIAL).unwrap().shared_secret;
    let LoginResponse::Challenge { session_id, .. } = svc.request_login("cam", &secret, ChallengeFormat::Arrangement, None).unwrap() else { panic!() };
    let c = svc.simulation_peek(session_id).unwrap();
    let mut req = wrong(&c);
    req.session_id = session_id;
    svc.submit_answer("cam", &secret, &req).unwrap();
    let c = svc.simulation_peek(session_id).unwrap();
    let mut req = right(&c);
    req.session_id = session_id;
    svc.submit_answer("cam", &secret, &req).unwrap();

    let events = JsonlLog::read_all(&path).unwrap();
    let kinds: Vec<&str> = events
        .iter()
        .map(|e| match e {
            Event::Paired { .. } => "paired",
            Event::ChallengeIssued { .. } => "issued",
            Event::Rendered { .. } => "rendered",
            Event::Answered { .. } => "answered",
            Event::StateChanged { .. } => "state",
            Event::FallbackRequired { .. } => "fallback",
        })
        .collect();
    assert_eq!(kinds, ["paired", "issued", "state", "answered", "issued", "answered", "state"]);
    assert!(matches!(events.last(), Some(Event::StateChanged { state: SessionState::Succeeded, .. })));
    // The shared secret never reaches the log.
    assert!(!std::fs::read_to_string(&path).unwrap().contains(&secret));
}
