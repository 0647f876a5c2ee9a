//! The login protocol: pairing, challenge issuance, verification and lockout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use egoauth_core::challenges::{
    candidates_for_arrangement, generate_arrangement_with, generate_selection_with, Answer,
    Challenge, ChallengeFormat,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;
use uuid::Uuid;

use crate::clock::Clock;
use crate::config::{OnExceed, ServiceConfig};
use crate::corpus::{Corpus, CorpusManifest};
use crate::error::{Result, ServiceError};
use crate::events::{Event, EventLog};
use crate::session::{Metrics, PairingRecord, SessionRecord, SessionSlot, SessionState};
use crate::wire::{AnswerOutcome, AnswerRequest, AnswerResponse, ChallengeView, LoginResponse};

pub const DEFAULT_CORPUS: &str = "default";

/// How many times a retry is regenerated to avoid showing the same images again.
const FRESH_IMAGE_TRIES: usize = 32;

/// Everything needed to resume a service after restart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceSnapshot {
    pub pairings: Vec<PairingRecord>,
    pub sessions: Vec<SessionSlot>,
}

type SlotRef = Arc<Mutex<SessionSlot>>;

pub struct AuthService {
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    events: Arc<dyn EventLog>,
    rng: Mutex<ChaCha8Rng>,
    pairings: RwLock<BTreeMap<String, PairingRecord>>,
    sessions: RwLock<HashMap<Uuid, SlotRef>>,
    /// Challenge id to owning session, for image lookups.
    challenges: RwLock<HashMap<Uuid, Uuid>>,
    corpora: RwLock<BTreeMap<String, Arc<Corpus>>>,
}

fn same_images(a: &Challenge, b: &Challenge) -> bool {
    let ids = |c: &Challenge| {
        let mut v: Vec<(u8, u64)> = c.images.iter().map(|i| (i.day_tag, i.frame_id)).collect();
        v.sort_unstable();
        v
    };
    ids(a) == ids(b)
}

fn secret_hex() -> String {
    let bytes: [u8; 32] = rand::rng().random();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl AuthService {
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>, events: Arc<dyn EventLog>) -> Result<Self> {
        config.validate()?;
        let rng = match config.rng_seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_os_rng(),
        };
        Ok(AuthService {
            config,
            clock,
            events,
            rng: Mutex::new(rng),
            pairings: Default::default(),
            sessions: Default::default(),
            challenges: Default::default(),
            corpora: Default::default(),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Loads every manifest listed in the configuration.
    pub fn load_configured_corpora(&self) -> Result<()> {
        for (name, path) in &self.config.corpora {
            self.add_corpus(name, CorpusManifest::load(path)?.into());
        }
        Ok(())
    }

    pub fn add_corpus(&self, name: &str, corpus: Corpus) {
        self.corpora
            .write()
            .unwrap()
            .insert(name.to_string(), Arc::new(corpus));
    }

    fn log(&self, event: Event) {
        if let Err(e) = self.events.append(&event) {
            tracing::error!("event log: {e}");
        }
    }

    pub fn pair(&self, device_id: &str, credential: &str) -> Result<PairingRecord> {
        let expected = self.config.pairing_credential.as_bytes();
        if !bool::from(credential.as_bytes().ct_eq(expected)) {
            return Err(ServiceError::Auth);
        }
        if device_id.trim().is_empty() {
            return Err(ServiceError::BadRequest("device_id is empty".into()));
        }
        let mut pairings = self.pairings.write().unwrap();
        if pairings.contains_key(device_id) {
            return Err(ServiceError::Conflict(format!("device {device_id} is already paired")));
        }
        let now = self.clock.now_ms();
        let record = PairingRecord {
            device_id: device_id.to_string(),
            shared_secret: secret_hex(),
            created_at_ms: now,
        };
        pairings.insert(device_id.to_string(), record.clone());
        drop(pairings);
        self.log(Event::Paired {
            device_id: device_id.to_string(),
            at_ms: now,
        });
        Ok(record)
    }

    fn authenticate(&self, device_id: &str, secret: &str) -> Result<()> {
        let pairings = self.pairings.read().unwrap();
        let record = pairings.get(device_id).ok_or(ServiceError::Auth)?;
        if bool::from(record.shared_secret.as_bytes().ct_eq(secret.as_bytes())) {
            Ok(())
        } else {
            Err(ServiceError::Auth)
        }
    }

    fn corpus(&self, name: &str) -> Result<Arc<Corpus>> {
        self.corpora
            .read()
            .unwrap()
            .get(name)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("corpus {name}")))
    }

    fn generate(&self, corpus: &Corpus, format: ChallengeFormat, previous: Option<&Challenge>) -> Result<Challenge> {
        let now = self.clock.now_ms();
        let mut rng = self.rng.lock().unwrap();
        let missing = || {
            egoauth_core::Error::InsufficientVariation {
                needed: 2,
                available: 0,
            }
        };
        let challenge = match format {
            ChallengeFormat::Arrangement => {
                let timeline = corpus.arrangement.as_ref().ok_or_else(missing)?;
                let n = self.config.n_images;
                let unavoidable = candidates_for_arrangement(timeline).len() <= n;
                let mut c = generate_arrangement_with(timeline, n, &mut *rng, now)?;
                if let Some(prev) = previous.filter(|_| !unavoidable) {
                    for _ in 0..FRESH_IMAGE_TRIES {
                        if !same_images(&c, prev) {
                            break;
                        }
                        c = generate_arrangement_with(timeline, n, &mut *rng, now)?;
                    }
                }
                c
            }
            ChallengeFormat::Selection => {
                let pools = corpus.selection.as_ref().ok_or_else(missing)?;
                generate_selection_with(pools, self.config.force_length, &mut *rng, now)?
            }
        };
        Ok(challenge)
    }

    /// Opens a session and issues its first challenge. A corpus that cannot
    /// support the format yields `FallbackRequired` and no session.
    pub fn request_login(
        &self,
        device_id: &str,
        secret: &str,
        format: ChallengeFormat,
        corpus: Option<&str>,
    ) -> Result<LoginResponse> {
        self.authenticate(device_id, secret)?;
        let corpus_name = corpus.unwrap_or(DEFAULT_CORPUS);
        let corpus = self.corpus(corpus_name)?;
        let challenge = match self.generate(&corpus, format, None) {
            Ok(c) => c,
            Err(ServiceError::Core(e @ egoauth_core::Error::InsufficientVariation { .. })) => {
                let reason = e.to_string();
                self.log(Event::FallbackRequired {
                    device_id: device_id.to_string(),
                    reason: reason.clone(),
                    at_ms: self.clock.now_ms(),
                });
                return Ok(LoginResponse::FallbackRequired { reason });
            }
            Err(e) => return Err(e),
        };
        let now = self.clock.now_ms();
        let session_id = Uuid::from_bytes(self.rng.lock().unwrap().random());
        let mut slot = SessionSlot {
            record: SessionRecord {
                session_id,
                device_id: device_id.to_string(),
                format,
                state: SessionState::Paired,
                attempts: 0,
                clicks: 0,
                started_at_ms: now,
                ended_at_ms: None,
                entry_time_ms: None,
                challenge_history: vec![challenge.challenge_id],
            },
            corpus: corpus_name.to_string(),
            current: challenge,
            rendered: false,
            replies: BTreeMap::new(),
        };
        slot.transition(SessionState::Challenged, now);
        let view = ChallengeView::from(&slot.current);
        self.log(Event::ChallengeIssued {
            session_id,
            device_id: device_id.to_string(),
            challenge: slot.current.clone(),
            at_ms: now,
        });
        self.log(Event::StateChanged {
            session_id,
            state: SessionState::Challenged,
            at_ms: now,
        });
        self.challenges
            .write()
            .unwrap()
            .insert(slot.current.challenge_id, session_id);
        self.sessions
            .write()
            .unwrap()
            .insert(session_id, Arc::new(Mutex::new(slot)));
        Ok(LoginResponse::Challenge {
            session_id,
            challenge: view,
        })
    }

    fn slot(&self, session_id: Uuid) -> Result<SlotRef> {
        self.sessions
            .read()
            .unwrap()
            .get(&session_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {session_id}")))
    }

    /// Slot of a session owned by an authenticated device. Someone else's
    /// session looks the same as a missing one.
    fn owned_slot(&self, device_id: &str, secret: &str, session_id: Uuid) -> Result<SlotRef> {
        self.authenticate(device_id, secret)?;
        let slot = self.slot(session_id)?;
        if slot.lock().unwrap().record.device_id != device_id {
            return Err(ServiceError::NotFound(format!("session {session_id}")));
        }
        Ok(slot)
    }

    /// Client beacon: every image of `challenge_id` is on screen. The first
    /// challenge's beacon starts the entry-time clock.
    pub fn rendered(&self, device_id: &str, secret: &str, session_id: Uuid, challenge_id: Uuid) -> Result<()> {
        let slot = self.owned_slot(device_id, secret, session_id)?;
        let mut slot = slot.lock().unwrap();
        if slot.record.state != SessionState::Challenged || slot.current.challenge_id != challenge_id {
            return Err(ServiceError::Session {
                session_id,
                message: "beacon for a challenge that is not open".into(),
            });
        }
        if slot.rendered {
            return Ok(());
        }
        let now = self.clock.now_ms();
        slot.rendered = true;
        if slot.record.challenge_history.len() == 1 && slot.record.attempts == 0 {
            slot.record.started_at_ms = now;
        }
        self.log(Event::Rendered {
            session_id,
            challenge_id,
            at_ms: now,
        });
        Ok(())
    }

    fn parse_answer(challenge: &Challenge, req: &AnswerRequest) -> Result<Answer> {
        match (challenge.format, &req.order, &req.selected) {
            (ChallengeFormat::Arrangement, Some(order), None) => Ok(Answer::Order(order.clone())),
            (ChallengeFormat::Selection, None, Some(selected)) => {
                let set: BTreeSet<usize> = selected.iter().copied().collect();
                if set.len() != selected.len() {
                    return Err(ServiceError::InvalidAnswer("selection repeats a slot".into()));
                }
                Ok(Answer::Selection(set))
            }
            (format, _, _) => Err(ServiceError::InvalidAnswer(format!(
                "a {format} answer needs exactly the `{}` field",
                if format == ChallengeFormat::Arrangement { "order" } else { "selected" }
            ))),
        }
    }

    pub fn submit_answer(&self, device_id: &str, secret: &str, req: &AnswerRequest) -> Result<AnswerResponse> {
        let session_id = req.session_id;
        let slot_ref = self.owned_slot(device_id, secret, session_id)?;
        let mut slot = slot_ref.lock().unwrap();
        if let Some(prior) = req.idempotency_key.as_ref().and_then(|k| slot.replies.get(k)) {
            return Ok(prior.clone());
        }
        let session_err = |message: &str| ServiceError::Session {
            session_id,
            message: message.into(),
        };
        if slot.record.state != SessionState::Challenged {
            return Err(session_err("session is closed"));
        }
        if slot.current.challenge_id != req.challenge_id {
            return Err(session_err("answer is for a stale challenge"));
        }
        let answer = Self::parse_answer(&slot.current, req)?;
        let verdict = slot
            .current
            .verify(&answer, self.config.selection_threshold)
            .map_err(|e| match e {
                egoauth_core::Error::InvalidAnswer(m) => ServiceError::InvalidAnswer(m),
                other => ServiceError::Core(other),
            })?;

        let now = self.clock.now_ms();
        slot.record.attempts += 1;
        slot.record.clicks += u64::from(req.click_count);
        self.log(Event::Answered {
            session_id,
            challenge_id: req.challenge_id,
            attempt: slot.record.attempts,
            similarity: verdict.similarity,
            accepted: verdict.accepted,
            at_ms: now,
        });

        let policy = &self.config.lockout;
        let elapsed = now.saturating_sub(slot.record.started_at_ms);
        let breach = slot.record.attempts > policy.max_attempts || elapsed > policy.max_entry_time_ms;
        let (outcome, next_state, fresh) = if breach {
            match policy.on_exceed {
                OnExceed::Lock => (AnswerOutcome::LockedOut, SessionState::LockedOut, None),
                OnExceed::Fallback => (AnswerOutcome::Fallback, SessionState::Fallback, None),
            }
        } else if verdict.accepted {
            (AnswerOutcome::Accepted, SessionState::Succeeded, None)
        } else if slot.current.format == ChallengeFormat::Arrangement {
            let corpus = self.corpus(&slot.corpus)?;
            let next = self.generate(&corpus, ChallengeFormat::Arrangement, Some(&slot.current))?;
            (AnswerOutcome::RetryWithNewChallenge, SessionState::Challenged, Some(next))
        } else {
            (AnswerOutcome::RetrySameChallenge, SessionState::Challenged, None)
        };

        slot.transition(next_state, now);
        let mut view = None;
        if let Some(next) = fresh {
            self.log(Event::ChallengeIssued {
                session_id,
                device_id: device_id.to_string(),
                challenge: next.clone(),
                at_ms: now,
            });
            self.challenges
                .write()
                .unwrap()
                .insert(next.challenge_id, session_id);
            slot.record.challenge_history.push(next.challenge_id);
            view = Some(ChallengeView::from(&next));
            slot.current = next;
            slot.rendered = false;
        }
        if next_state != SessionState::Challenged {
            self.log(Event::StateChanged {
                session_id,
                state: next_state,
                at_ms: now,
            });
        }
        let response = AnswerResponse {
            outcome,
            session_id,
            attempts: slot.record.attempts,
            challenge: view,
        };
        if let Some(key) = &req.idempotency_key {
            slot.replies.insert(key.clone(), response.clone());
        }
        Ok(response)
    }

    pub fn session_metrics(&self, device_id: &str, secret: &str, session_id: Uuid) -> Result<SessionRecord> {
        let slot = self.owned_slot(device_id, secret, session_id)?;
        let record = slot.lock().unwrap().record.clone();
        Ok(record)
    }

    pub fn records(&self) -> Vec<SessionRecord> {
        let sessions = self.sessions.read().unwrap();
        let mut records: Vec<SessionRecord> = sessions
            .values()
            .map(|s| s.lock().unwrap().record.clone())
            .collect();
        records.sort_by_key(|r| (r.started_at_ms, r.session_id));
        records
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::from_records(&self.records())
    }

    /// Image bytes for one slot of an open challenge.
    pub fn image(&self, challenge_id: Uuid, slot_index: usize) -> Result<Vec<u8>> {
        let not_found = || ServiceError::NotFound(format!("image {challenge_id}/{slot_index}"));
        let session_id = *self
            .challenges
            .read()
            .unwrap()
            .get(&challenge_id)
            .ok_or_else(not_found)?;
        let slot_ref = self.slot(session_id)?;
        let slot = slot_ref.lock().unwrap();
        if slot.record.state != SessionState::Challenged || slot.current.challenge_id != challenge_id {
            return Err(not_found());
        }
        let image = slot.current.images.get(slot_index).ok_or_else(not_found)?;
        let corpus = self.corpus(&slot.corpus)?;
        let path = corpus
            .image_path(image.day_tag, image.frame_id)
            .ok_or_else(not_found)?;
        std::fs::read(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// The open challenge with its ground truth. For in-process simulation
    /// only; nothing on the HTTP surface calls this.
    pub fn simulation_peek(&self, session_id: Uuid) -> Result<Challenge> {
        let slot = self.slot(session_id)?;
        let current = slot.lock().unwrap().current.clone();
        Ok(current)
    }

    pub fn snapshot(&self) -> ServiceSnapshot {
        let pairings = self.pairings.read().unwrap().values().cloned().collect();
        let mut sessions: Vec<SessionSlot> = self
            .sessions
            .read()
            .unwrap()
            .values()
            .map(|s| s.lock().unwrap().clone())
            .collect();
        sessions.sort_by_key(|s| s.record.session_id);
        ServiceSnapshot { pairings, sessions }
    }

    pub fn restore(&self, snapshot: ServiceSnapshot) {
        let mut pairings = self.pairings.write().unwrap();
        let mut sessions = self.sessions.write().unwrap();
        let mut challenges = self.challenges.write().unwrap();
        for p in snapshot.pairings {
            pairings.insert(p.device_id.clone(), p);
        }
        for s in snapshot.sessions {
            let id = s.record.session_id;
            challenges.insert(s.current.challenge_id, id);
            sessions.insert(id, Arc::new(Mutex::new(s)));
        }
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.snapshot()).expect("snapshot serializes");
        std::fs::write(path, text).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_snapshot(&self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let snapshot = serde_json::from_str(&text)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        self.restore(snapshot);
        Ok(())
    }
}
