//! JSON bodies exchanged with clients. Nothing here may carry ground truth,
//! day tags, the valid count or frame ids.

use egoauth_core::challenges::{Challenge, ChallengeFormat};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

pub const DEVICE_ID_HEADER: &str = "x-device-id";
pub const DEVICE_SECRET_HEADER: &str = "x-device-secret";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRequest {
    pub device_id: String,
    pub credential: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairResponse {
    pub device_id: String,
    pub shared_secret: String,
    pub created_at_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginRequest {
    pub format: ChallengeFormat,
    #[serde(default)]
    pub corpus: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub slot: usize,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeView {
    pub challenge_id: Uuid,
    pub format: ChallengeFormat,
    pub n: usize,
    pub images: Vec<ImageRef>,
}

impl From<&Challenge> for ChallengeView {
    fn from(c: &Challenge) -> Self {
        ChallengeView {
            challenge_id: c.challenge_id,
            format: c.format,
            n: c.n,
            images: (0..c.n)
                .map(|slot| ImageRef {
                    slot,
                    url: format!("/image/{}/{slot}", c.challenge_id),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LoginResponse {
    Challenge {
        session_id: Uuid,
        challenge: ChallengeView,
    },
    /// The corpus cannot support this format; use another authentication scheme.
    FallbackRequired { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderedRequest {
    pub session_id: Uuid,
    pub challenge_id: Uuid,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub session_id: Uuid,
    pub challenge_id: Uuid,
    /// Arrangement: slots in claimed chronological order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    /// Selection: slots currently toggled on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Vec<usize>>,
    #[serde(default)]
    pub click_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerOutcome {
    Accepted,
    RetryWithNewChallenge,
    RetrySameChallenge,
    LockedOut,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub outcome: AnswerOutcome,
    pub session_id: Uuid,
    pub attempts: u32,
    /// Present only with `retry_with_new_challenge`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub challenge: Option<ChallengeView>,
}
