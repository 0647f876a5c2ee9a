use std::collections::BTreeMap;

use egoauth_core::challenges::{Challenge, ChallengeFormat};
use egoauth_core::stats::mean_std;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Paired,
    Challenged,
    Succeeded,
    LockedOut,
    Fallback,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            SessionState::Succeeded | SessionState::LockedOut | SessionState::Fallback
        )
    }

    /// Edges of the login protocol. Retrying keeps a session in `Challenged`.
    pub fn can_move_to(self, next: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, next),
            (Paired, Challenged)
                | (Challenged, Challenged)
                | (Challenged, Succeeded)
                | (Challenged, LockedOut)
                | (Challenged, Fallback)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingRecord {
    pub device_id: String,
    pub shared_secret: String,
    pub created_at_ms: u64,
}

/// Effort bookkeeping for one login. Safe to hand to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: Uuid,
    pub device_id: String,
    pub format: ChallengeFormat,
    pub state: SessionState,
    /// Well-formed answers submitted.
    pub attempts: u32,
    /// Client-reported toggles and drops, summed over the session.
    pub clicks: u64,
    /// When the first challenge was fully shown, or when it was sent if the
    /// client never reported rendering.
    pub started_at_ms: u64,
    pub ended_at_ms: Option<u64>,
    pub entry_time_ms: Option<u64>,
    pub challenge_history: Vec<Uuid>,
}

/// Server-side state of one session, including what must never leave it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSlot {
    pub record: SessionRecord,
    pub corpus: String,
    pub current: Challenge,
    pub rendered: bool,
    /// Idempotency key to the response first produced for it.
    pub replies: BTreeMap<String, crate::wire::AnswerResponse>,
}

impl SessionSlot {
    pub(crate) fn transition(&mut self, next: SessionState, now_ms: u64) {
        assert!(
            self.record.state.can_move_to(next),
            "illegal transition {:?} -> {:?}",
            self.record.state,
            next
        );
        self.record.state = next;
        if next.is_terminal() {
            self.record.ended_at_ms = Some(now_ms);
            self.record.entry_time_ms = Some(now_ms.saturating_sub(self.record.started_at_ms));
        }
    }
}

/// Mean and sample standard deviation, shown as `m (sd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
    pub display: String,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        let (mean, std) = match values {
            [] => return None,
            [only] => (*only, 0.0),
            _ => mean_std(values)?,
        };
        Some(Spread {
            mean,
            std,
            display: format!("{mean:.2} ({std:.2})"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatMetrics {
    pub sessions: usize,
    pub succeeded: usize,
    pub locked_out: usize,
    pub fallback: usize,
    /// Over succeeded sessions.
    pub attempts: Option<Spread>,
    pub entry_time_s: Option<Spread>,
    pub clicks: Option<Spread>,
}

impl FormatMetrics {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a SessionRecord>) -> Self {
        let records: Vec<&SessionRecord> = records.into_iter().collect();
        let count = |s| records.iter().filter(|r| r.state == s).count();
        let done: Vec<&&SessionRecord> = records
            .iter()
            .filter(|r| r.state == SessionState::Succeeded)
            .collect();
        let pick = |f: &dyn Fn(&SessionRecord) -> f64| -> Vec<f64> { done.iter().map(|r| f(r)).collect() };
        FormatMetrics {
            sessions: records.len(),
            succeeded: done.len(),
            locked_out: count(SessionState::LockedOut),
            fallback: count(SessionState::Fallback),
            attempts: Spread::of(&pick(&|r| r.attempts as f64)),
            entry_time_s: Spread::of(&pick(&|r| r.entry_time_ms.unwrap_or(0) as f64 / 1000.0)),
            clicks: Spread::of(&pick(&|r| r.clicks as f64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub arrangement: FormatMetrics,
    pub selection: FormatMetrics,
}

impl Metrics {
    pub fn from_records(records: &[SessionRecord]) -> Self {
        let of = |f| FormatMetrics::from_records(records.iter().filter(|r| r.format == f));
        Metrics {
            arrangement: of(ChallengeFormat::Arrangement),
            selection: of(ChallengeFormat::Selection),
        }
    }
}
