use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::euclidean;

/// DBSCAN assignment of one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameLabel {
    Cluster(usize),
    Noise,
}

impl FrameLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            FrameLabel::Cluster(c) => Some(c),
            FrameLabel::Noise => None,
        }
    }

    pub fn is_noise(self) -> bool {
        self == FrameLabel::Noise
    }
}

/// Indices within `eps` of each point, the point itself included.
fn neighborhoods<P: AsRef<[f64]> + Sync>(points: &[P], eps: f64) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .map(|p| {
            points
                .iter()
                .enumerate()
                .filter(|(_, q)| euclidean(p.as_ref(), q.as_ref()) <= eps)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Density-based clustering over Euclidean distance.
///
/// A point is core when at least `min_points` points, itself included, lie
/// within `eps`. Clusters are numbered in the order their first core point
/// appears in `points`, and a border point reachable from several clusters
/// joins the lowest-numbered one. Everything else is noise.
pub fn dbscan<P: AsRef<[f64]> + Sync>(points: &[P], eps: f64, min_points: usize) -> Vec<FrameLabel> {
    let hoods = neighborhoods(points, eps);
    let is_core: Vec<bool> = hoods.iter().map(|h| h.len() >= min_points.max(1)).collect();
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..points.len() {
        if labels[start].is_some() || !is_core[start] {
            continue;
        }
        let cluster = next;
        next += 1;
        labels[start] = Some(cluster);
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &hoods[p] {
                if labels[q].is_none() {
                    labels[q] = Some(cluster);
                    if is_core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    labels
        .into_iter()
        .map(|l| l.map_or(FrameLabel::Noise, FrameLabel::Cluster))
        .collect()
}
