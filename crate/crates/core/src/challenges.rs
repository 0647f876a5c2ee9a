//! Image-arrangement and image-selection challenges.
//!
//! An arrangement challenge shows representatives of distinct, non-repeating
//! scenes in shuffled order; the user restores chronological order. A
//! selection challenge mixes scenes seen only yesterday (valid) with scenes
//! seen only today (decoys); the user marks the valid ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Error, Result};
use crate::timeline::{Segment, SegmentLabel, TimelineModel};

/// Smallest and largest selection grids.
pub const SELECTION_MIN_IMAGES: usize = 2;
pub const SELECTION_MAX_IMAGES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeFormat {
    Arrangement,
    Selection,
}

impl fmt::Display for ChallengeFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChallengeFormat::Arrangement => "arrangement",
            ChallengeFormat::Selection => "selection",
        })
    }
}

impl FromStr for ChallengeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arrangement" => Ok(ChallengeFormat::Arrangement),
            "selection" => Ok(ChallengeFormat::Selection),
            other => Err(Error::Config(format!("unknown challenge format {other:?}"))),
        }
    }
}

/// One presented image. Server-side only: frame identity and day never leave
/// the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeImage {
    pub slot: usize,
    pub frame_id: u64,
    pub day_tag: u8,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    /// Slot indices in chronological order.
    Order(Vec<usize>),
    /// Slots holding valid (yesterday-only) images.
    ValidSlots(BTreeSet<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Challenge {
    pub challenge_id: Uuid,
    pub format: ChallengeFormat,
    /// Presentation order: `images[i].slot == i`.
    pub images: Vec<ChallengeImage>,
    pub ground_truth: GroundTruth,
    pub n: usize,
    /// Number of valid images; selection only.
    pub k: Option<usize>,
    pub issued_at_ms: u64,
}

/// A submitted answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Order(Vec<usize>),
    Selection(BTreeSet<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnswerVerdict {
    pub correct: bool,
    /// Fraction of slots answered correctly, in `[0, 1]`.
    pub similarity: f64,
    pub accepted: bool,
}

/// Minimum selection similarity that counts as a successful login.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AcceptanceThreshold(f64);

impl AcceptanceThreshold {
    pub const EXACT: AcceptanceThreshold = AcceptanceThreshold(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(AcceptanceThreshold(value))
        } else {
            Err(Error::Config(format!(
                "acceptance threshold must lie in (0, 1], got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for AcceptanceThreshold {
    fn default() -> Self {
        Self::EXACT
    }
}

impl TryFrom<f64> for AcceptanceThreshold {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<AcceptanceThreshold> for f64 {
    fn from(t: AcceptanceThreshold) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrangementPolicy {
    pub n_images: usize,
    pub rng_seed: Option<u64>,
}

impl Default for ArrangementPolicy {
    fn default() -> Self {
        ArrangementPolicy {
            n_images: 4,
            rng_seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionPolicy {
    /// Fix the grid size instead of drawing it from 2..=8.
    pub force_length: Option<usize>,
    pub rng_seed: Option<u64>,
}

fn policy_rng(seed: Option<u64>) -> ChaCha8Rng {
    match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_os_rng(),
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn new_id<R: Rng + ?Sized>(rng: &mut R) -> Uuid {
    uuid::Builder::from_random_bytes(rng.random()).into_uuid()
}

/// Segments usable for arrangement, in chronological order.
///
/// Discarded segments go, and so does every segment of a cluster that shows
/// up in two or more segments: a repeated scene would make the order ambiguous.
pub fn candidates_for_arrangement(timeline: &TimelineModel) -> Vec<Segment> {
    let mut occurrences: BTreeMap<usize, usize> = BTreeMap::new();
    for label in timeline.cluster_of_segment.iter().filter_map(|l| l.cluster()) {
        *occurrences.entry(label).or_default() += 1;
    }
    timeline
        .labeled_segments()
        .filter_map(|(seg, label)| match label {
            SegmentLabel::Cluster(c) if occurrences[&c] == 1 => Some(seg.clone()),
            _ => None,
        })
        .collect()
}

/// Arrangement challenge from a caller-owned random source.
pub fn generate_arrangement_with<R: Rng + ?Sized>(
    timeline: &TimelineModel,
    n_images: usize,
    rng: &mut R,
    issued_at_ms: u64,
) -> Result<Challenge> {
    if n_images < 2 {
        return Err(Error::Config("arrangement needs at least two images".into()));
    }
    let candidates = candidates_for_arrangement(timeline);
    if candidates.len() < n_images {
        return Err(Error::InsufficientVariation {
            needed: n_images,
            available: candidates.len(),
        });
    }
    let mut picked: Vec<ChallengeImage> = candidates
        .choose_multiple(rng, n_images)
        .map(|seg| ChallengeImage {
            slot: 0,
            frame_id: seg.representative_frame_id,
            day_tag: timeline.day_tag,
            timestamp_ms: seg.representative_timestamp_ms,
        })
        .collect();
    // Never present an already solved puzzle.
    let order = loop {
        picked.shuffle(rng);
        let mut order: Vec<usize> = (0..n_images).collect();
        order.sort_by_key(|&i| (picked[i].timestamp_ms, picked[i].frame_id));
        if order.iter().enumerate().any(|(i, &s)| i != s) {
            break order;
        }
    };
    for (slot, img) in picked.iter_mut().enumerate() {
        img.slot = slot;
    }
    Ok(Challenge {
        challenge_id: new_id(rng),
        format: ChallengeFormat::Arrangement,
        images: picked,
        ground_truth: GroundTruth::Order(order),
        n: n_images,
        k: None,
        issued_at_ms,
    })
}

pub fn generate_arrangement(timeline: &TimelineModel, policy: &ArrangementPolicy) -> Result<Challenge> {
    let mut rng = policy_rng(policy.rng_seed);
    generate_arrangement_with(timeline, policy.n_images, &mut rng, now_ms())
}

/// Valid and decoy images for selection challenges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionPools {
    pub valid: Vec<ChallengeImage>,
    pub decoys: Vec<ChallengeImage>,
}

fn frame_clusters(timeline: &TimelineModel) -> BTreeSet<usize> {
    timeline
        .cluster_of_frame
        .values()
        .filter_map(|l| l.cluster())
        .collect()
}

fn pool_images(timeline: &TimelineModel, exclusive: &BTreeSet<usize>) -> Vec<ChallengeImage> {
    timeline
        .labeled_segments()
        .filter(|(_, label)| label.cluster().is_some_and(|c| exclusive.contains(&c)))
        .map(|(seg, _)| ChallengeImage {
            slot: 0,
            frame_id: seg.representative_frame_id,
            day_tag: timeline.day_tag,
            timestamp_ms: seg.representative_timestamp_ms,
        })
        .collect()
}

/// Splits two jointly clustered days into yesterday-only and today-only
/// representatives. A cluster with frames on both days feeds neither pool.
/// Repeats within one day stay.
pub fn selection_pools(yesterday: &TimelineModel, today: &TimelineModel) -> SelectionPools {
    let y = frame_clusters(yesterday);
    let t = frame_clusters(today);
    let y_only: BTreeSet<usize> = y.difference(&t).copied().collect();
    let t_only: BTreeSet<usize> = t.difference(&y).copied().collect();
    SelectionPools {
        valid: pool_images(yesterday, &y_only),
        decoys: pool_images(today, &t_only),
    }
}

/// Selection challenge from caller-owned randomness.
///
/// The grid size is drawn uniformly from `2..=8` (capped by the pools) unless
/// `force_length` fixes it; the valid count is then uniform over the values
/// the pools allow within `1..=n-1`.
pub fn generate_selection_with<R: Rng + ?Sized>(
    pools: &SelectionPools,
    force_length: Option<usize>,
    rng: &mut R,
    issued_at_ms: u64,
) -> Result<Challenge> {
    let (nv, nd) = (pools.valid.len(), pools.decoys.len());
    if nv == 0 || nd == 0 {
        return Err(Error::InsufficientVariation {
            needed: SELECTION_MIN_IMAGES,
            available: nv.min(1) + nd.min(1),
        });
    }
    let max_n = SELECTION_MAX_IMAGES.min(nv + nd);
    let n = match force_length {
        Some(n) if !(SELECTION_MIN_IMAGES..=SELECTION_MAX_IMAGES).contains(&n) => {
            return Err(Error::Config(format!(
                "selection length must be in {SELECTION_MIN_IMAGES}..={SELECTION_MAX_IMAGES}, got {n}"
            )));
        }
        Some(n) if n > nv + nd => {
            return Err(Error::InsufficientVariation {
                needed: n,
                available: nv + nd,
            });
        }
        Some(n) => n,
        None => rng.random_range(SELECTION_MIN_IMAGES..=max_n),
    };
    let k_lo = 1.max(n.saturating_sub(nd));
    let k_hi = (n - 1).min(nv);
    let k = rng.random_range(k_lo..=k_hi);

    let mut images: Vec<(ChallengeImage, bool)> = pools
        .valid
        .choose_multiple(rng, k)
        .map(|&img| (img, true))
        .chain(pools.decoys.choose_multiple(rng, n - k).map(|&img| (img, false)))
        .collect();
    images.shuffle(rng);
    let mut valid = BTreeSet::new();
    let images = images
        .into_iter()
        .enumerate()
        .map(|(slot, (mut img, is_valid))| {
            img.slot = slot;
            if is_valid {
                valid.insert(slot);
            }
            img
        })
        .collect();
    Ok(Challenge {
        challenge_id: new_id(rng),
        format: ChallengeFormat::Selection,
        images,
        ground_truth: GroundTruth::ValidSlots(valid),
        n,
        k: Some(k),
        issued_at_ms,
    })
}

/// "What have you not done today?" challenge over two jointly clustered days.
pub fn generate_selection(
    yesterday: &TimelineModel,
    today: &TimelineModel,
    policy: &SelectionPolicy,
) -> Result<Challenge> {
    let mut rng = policy_rng(policy.rng_seed);
    let pools = selection_pools(yesterday, today);
    generate_selection_with(&pools, policy.force_length, &mut rng, now_ms())
}

/// Exact-match check of a claimed chronological order. Similarity counts
/// slots in the right absolute position and is informational only.
pub fn verify_arrangement(challenge: &Challenge, submitted: &[usize]) -> Result<AnswerVerdict> {
    let GroundTruth::Order(truth) = &challenge.ground_truth else {
        return Err(Error::InvalidAnswer("challenge is not an arrangement".into()));
    };
    let n = challenge.n;
    let distinct: BTreeSet<usize> = submitted.iter().copied().collect();
    if submitted.len() != n || distinct.len() != n || distinct.iter().any(|&s| s >= n) {
        return Err(Error::InvalidAnswer(format!(
            "order must be a permutation of 0..{n}"
        )));
    }
    let hits = submitted.iter().zip(truth).filter(|(a, b)| a == b).count();
    let correct = hits == n;
    Ok(AnswerVerdict {
        correct,
        similarity: hits as f64 / n as f64,
        accepted: correct,
    })
}

/// Per-slot agreement between the submitted selection and the valid set.
pub fn verify_selection(
    challenge: &Challenge,
    selected: &BTreeSet<usize>,
    threshold: AcceptanceThreshold,
) -> Result<AnswerVerdict> {
    let GroundTruth::ValidSlots(valid) = &challenge.ground_truth else {
        return Err(Error::InvalidAnswer("challenge is not a selection".into()));
    };
    let n = challenge.n;
    if let Some(bad) = selected.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidAnswer(format!("unknown slot {bad}")));
    }
    let hits = (0..n)
        .filter(|s| selected.contains(s) == valid.contains(s))
        .count();
    let similarity = hits as f64 / n as f64;
    Ok(AnswerVerdict {
        correct: hits == n,
        similarity,
        accepted: similarity >= threshold.value(),
    })
}

impl Challenge {
    pub fn verify(&self, answer: &Answer, threshold: AcceptanceThreshold) -> Result<AnswerVerdict> {
        match (self.format, answer) {
            (ChallengeFormat::Arrangement, Answer::Order(order)) => verify_arrangement(self, order),
            (ChallengeFormat::Selection, Answer::Selection(sel)) => {
                verify_selection(self, sel, threshold)
            }
            (format, _) => Err(Error::InvalidAnswer(format!(
                "answer kind does not match a {format} challenge"
            ))),
        }
    }

    /// The answer a legitimate user would give.
    pub fn correct_answer(&self) -> Answer {
        match &self.ground_truth {
            GroundTruth::Order(o) => Answer::Order(o.clone()),
            GroundTruth::ValidSlots(v) => Answer::Selection(v.clone()),
        }
    }
}

/// Number of answers an attacker must consider.
///
/// Arrangement: `n!`. Selection, with `n` visible but `k` hidden: every
/// subset except the empty and full ones, `2^n - 2`.
pub fn challenge_space_size(format: ChallengeFormat, n: usize) -> u128 {
    match format {
        ChallengeFormat::Arrangement => (1..=n as u128).product(),
        ChallengeFormat::Selection => (1u128 << n) - 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::FrameLabel;

    fn seg(id: u64) -> Segment {
        Segment {
            start_frame_id: id * 10,
            end_frame_id: id * 10 + 9,
            representative_frame_id: id * 10 + 5,
            representative_timestamp_ms: (id * 10 + 5) * 200,
            frames: 10,
        }
    }

    fn timeline(labels: &[Option<usize>], day_tag: u8) -> TimelineModel {
        let segments: Vec<Segment> = (0..labels.len() as u64).map(seg).collect();
        let mut cluster_of_frame = BTreeMap::new();
        for (s, l) in segments.iter().zip(labels) {
            for f in s.start_frame_id..=s.end_frame_id {
                cluster_of_frame.insert(f, l.map_or(FrameLabel::Noise, FrameLabel::Cluster));
            }
        }
        TimelineModel {
            day_tag,
            threshold: 1.0,
            segments,
            cluster_of_frame,
            cluster_of_segment: labels
                .iter()
                .map(|l| l.map_or(SegmentLabel::Discarded, SegmentLabel::Cluster))
                .collect(),
        }
    }

    #[test]
    fn repeated_clusters_are_removed() {
        let tl = timeline(&[Some(0), Some(1), Some(0), Some(2), Some(3)], 0);
        let kept: Vec<u64> = candidates_for_arrangement(&tl)
            .iter()
            .map(|s| s.start_frame_id / 10)
            .collect();
        assert_eq!(kept, vec![1, 3, 4]);

        let tl = timeline(&[Some(0), None, Some(1), Some(2)], 0);
        assert_eq!(candidates_for_arrangement(&tl).len(), 3);
    }

    #[test]
    fn arrangement_with_exactly_enough_candidates() {
        let tl = timeline(&[Some(0), Some(1), Some(2), Some(3)], 0);
        let ch = generate_arrangement(&tl, &ArrangementPolicy { n_images: 4, rng_seed: Some(7) }).unwrap();
        let frames: BTreeSet<u64> = ch.images.iter().map(|i| i.frame_id).collect();
        assert_eq!(frames, BTreeSet::from([5, 15, 25, 35]));
        assert_eq!(challenge_space_size(ChallengeFormat::Arrangement, 4), 24);
        let GroundTruth::Order(order) = &ch.ground_truth else { panic!() };
        assert_ne!(order, &vec![0, 1, 2, 3]);
        let stamps: Vec<u64> = order.iter().map(|&s| ch.images[s].timestamp_ms).collect();
        assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn arrangement_is_seed_deterministic() {
        let tl = timeline(&[Some(0), Some(1), Some(2), Some(3), Some(4), Some(5)], 0);
        let policy = ArrangementPolicy { n_images: 4, rng_seed: Some(99) };
        let a = generate_arrangement(&tl, &policy).unwrap();
        let b = generate_arrangement(&tl, &policy).unwrap();
        assert_eq!((a.challenge_id, &a.images, &a.ground_truth), (b.challenge_id, &b.images, &b.ground_truth));
    }

    #[test]
    fn binary_arrangement_presents_wrong_order_first() {
        let tl = timeline(&[Some(0), Some(1)], 0);
        for seed in 0..20 {
            let ch = generate_arrangement(&tl, &ArrangementPolicy { n_images: 2, rng_seed: Some(seed) }).unwrap();
            assert_eq!(ch.ground_truth, GroundTruth::Order(vec![1, 0]));
        }
    }

    #[test]
    fn too_few_candidates() {
        let tl = timeline(&[Some(0), Some(1), Some(0)], 0);
        assert!(matches!(
            generate_arrangement(&tl, &ArrangementPolicy::default()),
            Err(Error::InsufficientVariation { needed: 4, available: 1 })
        ));
    }

    fn fixed_arrangement() -> Challenge {
        let images = (0..4)
            .map(|slot| ChallengeImage { slot, frame_id: slot as u64, day_tag: 0, timestamp_ms: 0 })
            .collect();
        Challenge {
            challenge_id: Uuid::nil(),
            format: ChallengeFormat::Arrangement,
            images,
            ground_truth: GroundTruth::Order(vec![2, 0, 3, 1]),
            n: 4,
            k: None,
            issued_at_ms: 0,
        }
    }

    #[test]
    fn arrangement_verdicts() {
        let ch = fixed_arrangement();
        let v = verify_arrangement(&ch, &[2, 0, 3, 1]).unwrap();
        assert!(v.correct && v.accepted && v.similarity == 1.0);
        let v = verify_arrangement(&ch, &[1, 3, 0, 2]).unwrap();
        assert_eq!(v.similarity, 0.0);
        let v = verify_arrangement(&ch, &[2, 0, 1, 3]).unwrap();
        assert_eq!(v.similarity, 0.5);
        assert!(!v.accepted);
        for bad in [&[0, 1, 2][..], &[0, 0, 1, 2], &[0, 1, 2, 4]] {
            assert!(matches!(verify_arrangement(&ch, bad), Err(Error::InvalidAnswer(_))));
        }
    }

    fn fixed_selection(n: usize, valid: &[usize]) -> Challenge {
        let images = (0..n)
            .map(|slot| ChallengeImage { slot, frame_id: slot as u64, day_tag: 0, timestamp_ms: 0 })
            .collect();
        Challenge {
            challenge_id: Uuid::nil(),
            format: ChallengeFormat::Selection,
            images,
            ground_truth: GroundTruth::ValidSlots(valid.iter().copied().collect()),
            n,
            k: Some(valid.len()),
            issued_at_ms: 0,
        }
    }

    #[test]
    fn selection_verdicts() {
        let ch = fixed_selection(8, &[1, 4, 6]);
        let exact = verify_selection(&ch, &BTreeSet::from([1, 4, 6]), AcceptanceThreshold::EXACT).unwrap();
        assert!(exact.correct && exact.accepted);
        let partial = BTreeSet::from([0, 6]);
        let tau75 = AcceptanceThreshold::new(0.75).unwrap();
        let v = verify_selection(&ch, &partial, tau75).unwrap();
        assert_eq!(v.similarity, 5.0 / 8.0);
        // Misses slots 4 and 6.
        let partial = BTreeSet::from([1]);
        let v = verify_selection(&ch, &partial, tau75).unwrap();
        assert_eq!(v.similarity, 0.75);
        assert!(v.accepted && !v.correct);
        assert!(!verify_selection(&ch, &partial, AcceptanceThreshold::EXACT).unwrap().accepted);
        let empty = verify_selection(&ch, &BTreeSet::new(), AcceptanceThreshold::EXACT).unwrap();
        assert_eq!(empty.similarity, 5.0 / 8.0);
        assert!(matches!(
            verify_selection(&ch, &BTreeSet::from([8]), AcceptanceThreshold::EXACT),
            Err(Error::InvalidAnswer(_))
        ));
    }

    #[test]
    fn selection_pool_construction() {
        // Yesterday: A(0) B(1) F(5); today: C(2) D(3) E(4) F(5).
        let y = timeline(&[Some(0), Some(1), Some(5), Some(0)], 1);
        let t = timeline(&[Some(2), Some(3), Some(5), Some(4)], 0);
        let pools = selection_pools(&y, &t);
        let valid: Vec<u64> = pools.valid.iter().map(|i| i.frame_id).collect();
        let decoys: Vec<u64> = pools.decoys.iter().map(|i| i.frame_id).collect();
        // Same-day repeats of A both stay.
        assert_eq!(valid, vec![5, 15, 35]);
        assert_eq!(decoys, vec![5, 15, 35]);
        assert!(pools.valid.iter().all(|i| i.day_tag == 1));
        assert!(pools.decoys.iter().all(|i| i.day_tag == 0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let ch = generate_selection_with(&pools, None, &mut rng, 0).unwrap();
            let k = ch.k.unwrap();
            assert!((2..=6).contains(&ch.n) && (1..ch.n).contains(&k));
            let GroundTruth::ValidSlots(v) = &ch.ground_truth else { panic!() };
            assert_eq!(v.len(), k);
            for img in &ch.images {
                assert_eq!(v.contains(&img.slot), img.day_tag == 1);
            }
        }
        let two = generate_selection_with(&pools, Some(2), &mut rng, 0).unwrap();
        assert_eq!((two.n, two.k), (2, Some(1)));
        assert!(generate_selection_with(&pools, Some(7), &mut rng, 0).is_err());
        assert!(generate_selection_with(&pools, Some(9), &mut rng, 0).unwrap_err().is_config());
    }

    #[test]
    fn empty_pool_is_insufficient_variation() {
        let y = timeline(&[Some(0)], 1);
        let t = timeline(&[Some(0), Some(1)], 0);
        let err = generate_selection(&y, &t, &SelectionPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientVariation { .. }));
    }

    #[test]
    fn space_sizes() {
        assert_eq!(challenge_space_size(ChallengeFormat::Arrangement, 4), 24);
        assert_eq!(challenge_space_size(ChallengeFormat::Selection, 8), 254);
        assert_eq!(challenge_space_size(ChallengeFormat::Selection, 2), 2);
    }

    #[test]
    fn verify_rejects_mismatched_answer_kind() {
        let ch = fixed_arrangement();
        assert!(ch
            .verify(&Answer::Selection(BTreeSet::new()), AcceptanceThreshold::EXACT)
            .is_err());
        assert!(ch.verify(&ch.correct_answer(), AcceptanceThreshold::EXACT).unwrap().correct);
    }

    #[test]
    fn threshold_bounds() {
        assert!(AcceptanceThreshold::new(0.0).is_err());
        assert!(AcceptanceThreshold::new(1.5).is_err());
        assert_eq!(AcceptanceThreshold::new(0.5).unwrap().value(), 0.5);
    }
}
