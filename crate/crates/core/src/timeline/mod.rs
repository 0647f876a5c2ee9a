//! Temporal segmentation and scene clustering of a descriptor sequence.
//!
//! One personalized threshold, the median distance between consecutive key
//! frames, drives both the segment boundaries and the DBSCAN radius. Segments
//! then take the majority cluster label of their frames; noise-dominated
//! segments are discarded.

mod dbscan;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::descriptors::Descriptor;
use crate::error::{Error, Result};
use crate::stats::{self, euclidean};

pub use dbscan::{dbscan, FrameLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Cluster(usize),
    Discarded,
}

impl SegmentLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            SegmentLabel::Cluster(c) => Some(c),
            SegmentLabel::Discarded => None,
        }
    }
}

/// A maximal run of consecutive key frames showing one scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start_frame_id: u64,
    pub end_frame_id: u64,
    pub representative_frame_id: u64,
    pub representative_timestamp_ms: u64,
    /// Number of key frames in the run.
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub min_points: usize,
    pub eps_override: Option<f64>,
    /// Join neighboring segments that end up with the same cluster label.
    pub merge_same_cluster_runs: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            min_points: 3,
            eps_override: None,
            merge_same_cluster_runs: true,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_points == 0 {
            return Err(Error::Config("min_points must be at least 1".into()));
        }
        if let Some(eps) = self.eps_override {
            if !(eps.is_finite() && eps >= 0.0) {
                return Err(Error::Config(format!("eps_override must be >= 0, got {eps}")));
            }
        }
        Ok(())
    }
}

/// Segments, labels and threshold for one day of key frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineModel {
    pub day_tag: u8,
    pub threshold: f64,
    pub segments: Vec<Segment>,
    pub cluster_of_frame: BTreeMap<u64, FrameLabel>,
    /// Parallel to `segments`.
    pub cluster_of_segment: Vec<SegmentLabel>,
}

impl TimelineModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timeline serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad timeline json: {e}")))
    }

    pub fn labeled_segments(&self) -> impl Iterator<Item = (&Segment, SegmentLabel)> {
        self.segments.iter().zip(self.cluster_of_segment.iter().copied())
    }

    /// Distinct cluster labels held by non-discarded segments.
    pub fn segment_clusters(&self) -> BTreeSet<usize> {
        self.cluster_of_segment.iter().filter_map(|l| l.cluster()).collect()
    }

    pub fn noise_frames(&self) -> impl Iterator<Item = u64> + '_ {
        self.cluster_of_frame
            .iter()
            .filter(|(_, l)| l.is_noise())
            .map(|(&id, _)| id)
    }

    pub fn discarded_segments(&self) -> usize {
        self.cluster_of_segment
            .iter()
            .filter(|l| **l == SegmentLabel::Discarded)
            .count()
    }
}

fn consecutive_distances(descriptors: &[Descriptor]) -> Vec<f64> {
    descriptors
        .windows(2)
        .map(|w| euclidean(&w[0].vector, &w[1].vector))
        .collect()
}

/// Median Euclidean distance between consecutive descriptors.
pub fn compute_threshold(descriptors: &[Descriptor]) -> Result<f64> {
    if descriptors.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: descriptors.len(),
        });
    }
    Ok(stats::median(&consecutive_distances(descriptors)).expect("at least one distance"))
}

/// Index ranges of the raw segmentation: a boundary falls exactly where the
/// consecutive distance exceeds `threshold`.
fn segment_ranges(descriptors: &[Descriptor], threshold: f64) -> Vec<Range<usize>> {
    let mut ranges = Vec::new();
    let mut start = 0;
    for (i, d) in consecutive_distances(descriptors).into_iter().enumerate() {
        if d > threshold {
            ranges.push(start..i + 1);
            start = i + 1;
        }
    }
    if !descriptors.is_empty() {
        ranges.push(start..descriptors.len());
    }
    ranges
}

/// Index of the frame minimizing summed distance to the whole run, earliest
/// on ties. Only indices accepted by `eligible` may be chosen; if none is,
/// every frame is.
fn medoid(descriptors: &[Descriptor], range: Range<usize>, eligible: impl Fn(usize) -> bool) -> usize {
    let run = &descriptors[range.clone()];
    let any_eligible = range.clone().any(&eligible);
    let mut best = (range.start, f64::INFINITY);
    for (i, a) in run.iter().enumerate() {
        if any_eligible && !eligible(range.start + i) {
            continue;
        }
        let cost: f64 = run.iter().map(|b| euclidean(&a.vector, &b.vector)).sum();
        if cost < best.1 {
            best = (range.start + i, cost);
        }
    }
    best.0
}

fn make_segment(descriptors: &[Descriptor], range: Range<usize>, rep_index: usize) -> Segment {
    let rep = &descriptors[rep_index];
    Segment {
        start_frame_id: descriptors[range.start].frame_id,
        end_frame_id: descriptors[range.end - 1].frame_id,
        representative_frame_id: rep.frame_id,
        representative_timestamp_ms: rep.timestamp_ms,
        frames: range.len(),
    }
}

/// Splits an ordered descriptor sequence wherever consecutive frames are
/// farther apart than `threshold`. Each segment's representative is its medoid.
pub fn segment(descriptors: &[Descriptor], threshold: f64) -> Result<Vec<Segment>> {
    if descriptors.is_empty() {
        return Err(Error::CorpusEmpty("no descriptors to segment".into()));
    }
    Ok(segment_ranges(descriptors, threshold)
        .into_iter()
        .map(|r| {
            let rep = medoid(descriptors, r.clone(), |_| true);
            make_segment(descriptors, r, rep)
        })
        .collect())
}

/// Plurality cluster of a run. Noise wins only with a strict plurality;
/// equal cluster counts go to the smaller label.
fn majority(labels: &[FrameLabel]) -> SegmentLabel {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut noise = 0;
    for l in labels {
        match l {
            FrameLabel::Cluster(c) => *counts.entry(*c).or_default() += 1,
            FrameLabel::Noise => noise += 1,
        }
    }
    // BTreeMap iterates in label order, so max_by_key's "last max wins" needs reversing.
    let best = counts
        .iter()
        .rev()
        .max_by_key(|(_, &n)| n)
        .map(|(&c, &n)| (c, n));
    match best {
        Some((c, n)) if n >= noise => SegmentLabel::Cluster(c),
        _ => SegmentLabel::Discarded,
    }
}

fn assemble(
    descriptors: &[Descriptor],
    labels: &[FrameLabel],
    threshold: f64,
    merge: bool,
) -> TimelineModel {
    let mut runs: Vec<(Range<usize>, SegmentLabel)> = Vec::new();
    for range in segment_ranges(descriptors, threshold) {
        let label = majority(&labels[range.clone()]);
        match runs.last_mut() {
            Some((prev, prev_label))
                if merge && label != SegmentLabel::Discarded && *prev_label == label =>
            {
                prev.end = range.end;
            }
            _ => runs.push((range, label)),
        }
    }
    // A labeled segment is represented by one of its own cluster's frames.
    let (segments, cluster_of_segment) = runs
        .into_iter()
        .map(|(r, l)| {
            let rep = medoid(descriptors, r.clone(), |i| match l {
                SegmentLabel::Cluster(c) => labels[i] == FrameLabel::Cluster(c),
                SegmentLabel::Discarded => true,
            });
            (make_segment(descriptors, r, rep), l)
        })
        .unzip();
    TimelineModel {
        day_tag: descriptors.first().map_or(0, |d| d.day_tag),
        threshold,
        segments,
        cluster_of_frame: descriptors
            .iter()
            .zip(labels)
            .map(|(d, &l)| (d.frame_id, l))
            .collect(),
        cluster_of_segment,
    }
}

/// Thresholds, segments and clusters one ordered descriptor sequence.
pub fn build_timeline(descriptors: &[Descriptor], config: &ClusterConfig) -> Result<TimelineModel> {
    config.validate()?;
    let threshold = match config.eps_override {
        Some(eps) => {
            if descriptors.len() < 2 {
                return Err(Error::InsufficientData {
                    needed: 2,
                    got: descriptors.len(),
                });
            }
            eps
        }
        None => compute_threshold(descriptors)?,
    };
    let vectors: Vec<&[f64]> = descriptors.iter().map(|d| d.vector.as_slice()).collect();
    let labels = dbscan(&vectors, threshold, config.min_points);
    Ok(assemble(
        descriptors,
        &labels,
        threshold,
        config.merge_same_cluster_runs,
    ))
}

/// Builds one timeline per day over a shared label space.
///
/// The threshold pools consecutive distances within each day (never across
/// days) and DBSCAN runs once over every frame of every day, so a label means
/// the same scene in all returned timelines. Descriptors must come from one
/// PCA fitted on the union of the days.
pub fn build_joint_timelines(
    days: &[Vec<Descriptor>],
    config: &ClusterConfig,
) -> Result<Vec<TimelineModel>> {
    config.validate()?;
    if let Some(empty) = days.iter().position(|d| d.is_empty()) {
        return Err(Error::CorpusEmpty(format!("day {empty} has no key frames")));
    }
    let pooled: Vec<f64> = days.iter().flat_map(|d| consecutive_distances(d)).collect();
    let threshold = match config.eps_override {
        Some(eps) => eps,
        None => stats::median(&pooled).ok_or(Error::InsufficientData {
            needed: 2,
            got: days.iter().map(Vec::len).sum(),
        })?,
    };
    let vectors: Vec<&[f64]> = days
        .iter()
        .flatten()
        .map(|d| d.vector.as_slice())
        .collect();
    let labels = dbscan(&vectors, threshold, config.min_points);
    let mut offset = 0;
    Ok(days
        .iter()
        .map(|day| {
            let slice = &labels[offset..offset + day.len()];
            offset += day.len();
            assemble(day, slice, threshold, config.merge_same_cluster_runs)
        })
        .collect())
}
