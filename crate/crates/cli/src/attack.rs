//! Simulated guessing attacks against an in-process service.

use std::collections::BTreeSet;
use std::sync::Arc;

use anyhow::{bail, ensure, Result};
use egoauth_authsvc::events::NullLog;
use egoauth_authsvc::session::Spread;
use egoauth_authsvc::wire::{AnswerOutcome, AnswerRequest, LoginResponse};
use egoauth_authsvc::{AuthService, Corpus, LockoutPolicy, ManualClock, OnExceed, ServiceConfig};
use egoauth_core::challenges::{Challenge, ChallengeFormat, GroundTruth};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerKind {
    /// Uniform guess every attempt.
    Random,
    /// The same answer every attempt: reversed slots, or the first half of
    /// the grid for selection.
    FixedPattern,
    /// Knows each pairwise order (or each slot's validity) with probability `knowledge`.
    Informed,
    /// The legitimate user: always right.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackerProfile {
    pub kind: AttackerKind,
    pub knowledge: Option<f64>,
}

impl AttackerProfile {
    pub fn random() -> Self {
        AttackerProfile { kind: AttackerKind::Random, knowledge: None }
    }

    pub fn fixed_pattern() -> Self {
        AttackerProfile { kind: AttackerKind::FixedPattern, knowledge: None }
    }

    pub fn informed(prior: f64) -> Result<Self> {
        let p = AttackerProfile { kind: AttackerKind::Informed, knowledge: Some(prior) };
        p.validate()?;
        Ok(p)
    }

    pub fn oracle() -> Self {
        AttackerProfile { kind: AttackerKind::Oracle, knowledge: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == AttackerKind::Informed {
            let Some(p) = self.knowledge else { bail!("informed attacker needs a knowledge prior") };
            ensure!((0.5..=1.0).contains(&p), "knowledge prior must lie in [0.5, 1], got {p}");
        }
        Ok(())
    }

    /// The answer this attacker submits for `challenge`, plus how many
    /// drags or taps it took.
    pub fn answer<R: Rng + ?Sized>(&self, challenge: &Challenge, rng: &mut R) -> (AnswerRequest, u32) {
        let n = challenge.n;
        let mut req = AnswerRequest { challenge_id: challenge.challenge_id, ..Default::default() };
        let actions;
        match &challenge.ground_truth {
            GroundTruth::Order(truth) => {
                let order: Vec<usize> = match self.kind {
                    AttackerKind::Random => {
                        let mut o: Vec<usize> = (0..n).collect();
                        o.shuffle(rng);
                        o
                    }
                    AttackerKind::FixedPattern => (0..n).rev().collect(),
                    AttackerKind::Informed => copeland_order(truth, self.knowledge.unwrap_or(0.5), rng),
                    AttackerKind::Oracle => truth.clone(),
                };
                actions = n as u32;
                req.order = Some(order);
            }
            GroundTruth::ValidSlots(valid) => {
                let chosen: BTreeSet<usize> = match self.kind {
                    AttackerKind::Random => {
                        // Uniform over the 2^n - 2 subsets that are neither empty nor full.
                        let mask: u64 = rng.random_range(1..(1u64 << n) - 1);
                        (0..n).filter(|s| mask >> s & 1 == 1).collect()
                    }
                    AttackerKind::FixedPattern => (0..n.div_ceil(2)).collect(),
                    AttackerKind::Informed => {
                        let p = self.knowledge.unwrap_or(0.5);
                        (0..n).filter(|s| valid.contains(s) == rng.random_bool(p)).collect()
                    }
                    AttackerKind::Oracle => valid.clone(),
                };
                actions = chosen.len().max(1) as u32;
                req.selected = Some(chosen.into_iter().collect());
            }
        }
        req.click_count = actions;
        (req, actions)
    }
}

/// Ranks slots by pairwise wins, each pairwise judgement right with
/// probability `p`; ties break at random.
fn copeland_order<R: Rng + ?Sized>(truth: &[usize], p: f64, rng: &mut R) -> Vec<usize> {
    let n = truth.len();
    let mut wins = vec![0usize; n];
    for a in 0..n {
        for b in a + 1..n {
            // truth[a] really comes before truth[b].
            if rng.random_bool(p) {
                wins[truth[a]] += 1;
            } else {
                wins[truth[b]] += 1;
            }
        }
    }
    let mut slots: Vec<(usize, u64)> = (0..n).map(|s| (s, rng.random())).collect();
    slots.sort_by_key(|&(s, tiebreak)| (std::cmp::Reverse(wins[s]), tiebreak));
    slots.into_iter().map(|(s, _)| s).collect()
}

/// Per-action latency in milliseconds, log-normal with the given mean and spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub mean_ms: f64,
    pub std_ms: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel { mean_ms: 900.0, std_ms: 400.0 }
    }
}

impl LatencyModel {
    fn distribution(&self) -> Result<LogNormal<f64>> {
        ensure!(self.mean_ms > 0.0 && self.std_ms >= 0.0, "latency mean must be positive");
        let var = (self.std_ms / self.mean_ms).powi(2);
        let sigma = (1.0 + var).ln().sqrt();
        let mu = self.mean_ms.ln() - sigma * sigma / 2.0;
        Ok(LogNormal::new(mu, sigma)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub format: ChallengeFormat,
    pub trials: usize,
    /// Attempts allowed before the session locks; the trial then counts as failed.
    pub max_attempts: u32,
    pub force_length: Option<usize>,
    pub n_images: usize,
    pub seed: u64,
    pub latency: LatencyModel,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            format: ChallengeFormat::Arrangement,
            trials: 1000,
            max_attempts: 100_000,
            force_length: None,
            n_images: 4,
            seed: 0,
            latency: LatencyModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub attempts: u32,
    pub clicks: u64,
    pub entry_time_ms: u64,
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub profile: AttackerProfile,
    pub format: ChallengeFormat,
    pub trials: Vec<TrialResult>,
    pub attempts: Option<Spread>,
    pub entry_time_s: Option<Spread>,
    pub successes: usize,
    pub total_attempts: u64,
}

impl AttackReport {
    /// Successful submissions over all submissions.
    pub fn per_attempt_success_rate(&self) -> f64 {
        self.successes as f64 / self.total_attempts.max(1) as f64
    }
}

impl std::fmt::Display for AttackReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |s: &Option<Spread>| s.as_ref().map_or("-".to_string(), |s| s.display.clone());
        write!(
            f,
            "{:?} vs {}: {}/{} trials succeeded, attempts {}, entry time (s) {}, per-attempt success {:.5}",
            self.profile.kind,
            self.format,
            self.successes,
            self.trials.len(),
            show(&self.attempts),
            show(&self.entry_time_s),
            self.per_attempt_success_rate()
        )
    }
}

/// Runs `config.trials` logins against a private service over `corpus`.
/// Attempts and entry time are averaged over successful trials.
pub fn simulate_attacker(profile: AttackerProfile, corpus: Corpus, config: &AttackConfig) -> Result<AttackReport> {
    profile.validate()?;
    let clock = ManualClock::new(0);
    let service_config = ServiceConfig {
        n_images: config.n_images,
        force_length: config.force_length,
        rng_seed: Some(config.seed),
        lockout: LockoutPolicy {
            max_attempts: config.max_attempts,
            max_entry_time_ms: u64::MAX,
            on_exceed: OnExceed::Lock,
        },
        ..Default::default()
    };
    let credential = service_config.pairing_credential.clone();
    let svc = AuthService::new(service_config, Arc::new(clock.clone()), Arc::new(NullLog))?;
    svc.add_corpus(egoauth_authsvc::DEFAULT_CORPUS, corpus);
    let secret = svc.pair("simulated-device", &credential)?.shared_secret;
    let device = "simulated-device";
    let latency = config.latency.distribution()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_a77a_c4e5);

    let mut trials = Vec::with_capacity(config.trials);
    for _ in 0..config.trials {
        let LoginResponse::Challenge { session_id, challenge } =
            svc.request_login(device, &secret, config.format, None)?
        else {
            bail!(egoauth_core::Error::InsufficientVariation { needed: config.n_images, available: 0 });
        };
        svc.rendered(device, &secret, session_id, challenge.challenge_id)?;
        let succeeded = loop {
            let current = svc.simulation_peek(session_id)?;
            let (mut req, actions) = profile.answer(&current, &mut rng);
            let think: f64 = (0..actions).map(|_| latency.sample(&mut rng)).sum();
            clock.advance(think.round() as u64);
            req.session_id = session_id;
            match svc.submit_answer(device, &secret, &req)?.outcome {
                AnswerOutcome::Accepted => break true,
                AnswerOutcome::LockedOut | AnswerOutcome::Fallback => break false,
                AnswerOutcome::RetryWithNewChallenge | AnswerOutcome::RetrySameChallenge => {}
            }
        };
        let record = svc.session_metrics(device, &secret, session_id)?;
        trials.push(TrialResult {
            attempts: record.attempts,
            clicks: record.clicks,
            entry_time_ms: record.entry_time_ms.unwrap_or(0),
            succeeded,
        });
    }
    let won: Vec<&TrialResult> = trials.iter().filter(|t| t.succeeded).collect();
    Ok(AttackReport {
        profile,
        format: config.format,
        attempts: Spread::of(&won.iter().map(|t| t.attempts as f64).collect::<Vec<_>>()),
        entry_time_s: Spread::of(&won.iter().map(|t| t.entry_time_ms as f64 / 1000.0).collect::<Vec<_>>()),
        successes: won.len(),
        total_attempts: trials.iter().map(|t| t.attempts as u64).sum(),
        trials,
    })
}
