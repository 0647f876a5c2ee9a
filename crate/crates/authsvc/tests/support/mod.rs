#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use egoauth_authsvc::{
    AuthService, Corpus, CorpusManifest, FrameAsset, ManualClock, SelectionDays, ServiceConfig,
};
use egoauth_authsvc::events::MemoryLog;
use egoauth_core::descriptors::Descriptor;
use egoauth_core::timeline::{build_joint_timelines, build_timeline, ClusterConfig};
use image::{GrayImage, Luma};

pub const CREDENTIAL: &str = "pair-me";
const JITTER: [f64; 5] = [0.0, 0.01, -0.01, 0.02, -0.02];

/// Five frames per scene, scenes far apart in descriptor space.
pub fn walk(day_tag: u8, scenes: &[usize]) -> Vec<Descriptor> {
    scenes
        .iter()
        .enumerate()
        .flat_map(|(pos, &scene)| {
            (0..5).map(move |j| {
                let i = (pos * 5 + j) as u64;
                Descriptor {
                    frame_id: i,
                    day_tag,
                    timestamp_ms: i * 200,
                    vector: vec![scene as f64 * 10.0 + JITTER[j], 0.0],
                }
            })
        })
        .collect()
}

fn assets(dir: &Path, days: &[&[Descriptor]]) -> Vec<FrameAsset> {
    let mut out = Vec::new();
    for day in days {
        for d in *day {
            let name = format!("d{}_{:04}.png", d.day_tag, d.frame_id);
            GrayImage::from_pixel(8, 8, Luma([(d.frame_id * 7) as u8]))
                .save(dir.join(&name))
                .unwrap();
            out.push(FrameAsset {
                day_tag: d.day_tag,
                frame_id: d.frame_id,
                path: name.into(),
            });
        }
    }
    out
}

/// Six distinct scenes for arrangement; yesterday scenes 0..=5 and today
/// scenes 5..=9 for selection, so scene 5 is seen on both days.
pub fn manifest(dir: &Path) -> CorpusManifest {
    let today_walk = walk(0, &[0, 1, 2, 3, 4, 5]);
    let arrangement = build_timeline(&today_walk, &ClusterConfig::default()).unwrap();
    let yesterday = walk(1, &[0, 1, 2, 3, 4, 5]);
    let today = walk(0, &[5, 6, 7, 8, 9]);
    let days = build_joint_timelines(&[yesterday.clone(), today.clone()], &ClusterConfig::default()).unwrap();
    let manifest = CorpusManifest {
        arrangement: Some(arrangement),
        selection: Some(SelectionDays {
            yesterday: days[0].clone(),
            today: days[1].clone(),
        }),
        frames: assets(dir, &[&today_walk, &yesterday]),
    };
    let path = dir.join("corpus.json");
    std::fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();
    CorpusManifest::load(&path).unwrap()
}

/// One scene only: arrangement and selection are both impossible.
pub fn degenerate() -> Corpus {
    let same = walk(0, &[3, 3, 3, 3]);
    let tl = build_timeline(&same, &ClusterConfig::default()).unwrap();
    let days = build_joint_timelines(&[walk(1, &[3, 3]), walk(0, &[3, 3])], &ClusterConfig::default()).unwrap();
    CorpusManifest {
        arrangement: Some(tl),
        selection: Some(SelectionDays {
            yesterday: days[0].clone(),
            today: days[1].clone(),
        }),
        frames: Vec::new(),
    }
    .into()
}

pub struct Harness {
    pub svc: Arc<AuthService>,
    pub clock: ManualClock,
    pub log: Arc<MemoryLog>,
    pub dir: tempfile::TempDir,
}

pub fn harness(config: ServiceConfig) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let clock = ManualClock::new(1_000_000);
    let log = Arc::new(MemoryLog::default());
    let config = ServiceConfig {
        rng_seed: config.rng_seed.or(Some(42)),
        ..config
    };
    let svc = AuthService::new(config, Arc::new(clock.clone()), log.clone()).unwrap();
    svc.add_corpus("default", manifest(dir.path()).into());
    svc.add_corpus("flat", degenerate());
    Harness {
        svc: Arc::new(svc),
        clock,
        log,
        dir,
    }
}
