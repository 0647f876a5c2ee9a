//! Ingest, describe, cluster: from frame directories to a servable corpus.
//!
//! Each stage writes its artifacts into one work directory so stages can run
//! separately (`ingest`, `featurize`, `timeline`) or together (`pipeline`).
//! Reruns with the same inputs and configuration produce identical bytes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use egoauth_authsvc::{CorpusManifest, FrameAsset, SelectionDays};
use egoauth_core::challenges::candidates_for_arrangement;
use egoauth_core::descriptors::{
    format_descriptors, parse_descriptors, raw_descriptor, fit_pca, Descriptor, PcaModel,
};
use egoauth_core::ingest::{
    load_frames, select_keyframes, FixationLog, Frame, IngestConfig, SelectionMode,
};
use egoauth_core::timeline::{build_joint_timelines, build_timeline, TimelineModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AppConfig;
use crate::synth::FIXATIONS_FILE;

pub const KEYFRAME_DIR: &str = "keyframes";
pub const DESCRIPTORS_FILE: &str = "descriptors.tsv";
pub const PCA_FILE: &str = "pca.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub use egoauth_authsvc::corpus::MANIFEST_FILE;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayInput {
    pub frames_dir: PathBuf,
    /// Defaults to `fixations.csv` inside the frame directory, if present.
    pub fixations: Option<PathBuf>,
    pub day_tag: u8,
}

/// Finds the days under `root`: the directory itself if it holds frames,
/// else its `day<N>` subdirectories.
pub fn discover_days(root: &Path) -> Result<Vec<DayInput>> {
    if !root.is_dir() {
        bail!(egoauth_core::Error::CorpusEmpty(format!("{} is not a directory", root.display())));
    }
    let mut days = Vec::new();
    for entry in fs::read_dir(root).with_context(|| format!("listing {}", root.display()))? {
        let path = entry?.path();
        let tag = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("day"))
            .and_then(|n| n.parse::<u8>().ok());
        if let (true, Some(day_tag)) = (path.is_dir(), tag) {
            days.push(DayInput {
                frames_dir: path,
                fixations: None,
                day_tag,
            });
        }
    }
    if days.is_empty() {
        days.push(DayInput {
            frames_dir: root.to_path_buf(),
            fixations: None,
            day_tag: 0,
        });
    }
    days.sort_by(|a, b| b.day_tag.cmp(&a.day_tag));
    Ok(days)
}

fn keyframe_name(day_tag: u8, frame_id: u64) -> String {
    format!("d{day_tag}_{frame_id:06}.png")
}

fn keyframe_index(day_tag: u8) -> String {
    format!("keyframes_day{day_tag}.tsv")
}

pub fn timeline_file(day_tag: u8) -> String {
    format!("timeline_day{day_tag}.json")
}

/// Loads and filters one day of frames.
pub fn ingest_day(day: &DayInput, config: &IngestConfig) -> Result<(usize, Vec<Frame>)> {
    let config = IngestConfig {
        day_tag: day.day_tag,
        ..config.clone()
    };
    let frames = load_frames(&day.frames_dir, &config)?;
    let total = frames.len();
    let fixations = match config.selection_mode {
        SelectionMode::BlurMedian => None,
        SelectionMode::Fixation => {
            let path = day
                .fixations
                .clone()
                .unwrap_or_else(|| day.frames_dir.join(FIXATIONS_FILE));
            Some(FixationLog::read_csv(&path)?)
        }
    };
    let kept = select_keyframes(frames, fixations.as_ref(), &config)?;
    Ok((total, kept))
}

/// Writes key frames as PNGs plus `keyframes_day<N>.tsv`
/// (`frame_id`, `timestamp_ms`, `sharpness`, file name). `frames_read` is
/// the day's frame count before selection.
pub fn write_keyframes(work: &Path, day_tag: u8, frames_read: usize, frames: &[Frame]) -> Result<()> {
    let dir = work.join(KEYFRAME_DIR);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    frames.par_iter().try_for_each(|f| -> Result<()> {
        let path = dir.join(keyframe_name(day_tag, f.frame_id));
        f.pixels
            .save(&path)
            .with_context(|| format!("writing {}", path.display()))
    })?;
    let mut index = format!("# frames_read {frames_read}\nframe_id\ttimestamp_ms\tsharpness\tfile\n");
    for f in frames {
        let sharpness = f.sharpness.map_or("-".to_string(), |s| format!("{s:?}"));
        index.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            f.frame_id,
            f.timestamp_ms,
            sharpness,
            keyframe_name(day_tag, f.frame_id)
        ));
    }
    fs::write(work.join(keyframe_index(day_tag)), index)?;
    Ok(())
}

/// Reads every day's key frames back, oldest day first, with each day's
/// `(day_tag, frames_read, key frames)` counts.
pub fn read_keyframes(work: &Path) -> Result<(Vec<Frame>, Vec<(u8, usize, usize)>)> {
    let mut tags = Vec::new();
    for entry in fs::read_dir(work).with_context(|| format!("listing {}", work.display()))? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(tag) = name
            .strip_prefix("keyframes_day")
            .and_then(|n| n.strip_suffix(".tsv"))
            .and_then(|n| n.parse::<u8>().ok())
        {
            tags.push(tag);
        }
    }
    if tags.is_empty() {
        bail!(egoauth_core::Error::CorpusEmpty(format!(
            "no key frames in {}; run ingest first",
            work.display()
        )));
    }
    tags.sort_unstable_by(|a, b| b.cmp(a));
    let mut frames = Vec::new();
    let mut counts = Vec::new();
    for tag in tags {
        let path = work.join(keyframe_index(tag));
        let text = fs::read_to_string(&path)?;
        let before = frames.len();
        let mut frames_read = 0;
        for (i, line) in text.lines().enumerate() {
            if let Some(n) = line.strip_prefix("# frames_read ") {
                frames_read = n.trim().parse().unwrap_or(0);
                continue;
            }
            if line.starts_with("frame_id\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || egoauth_core::Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: "expected frame_id, timestamp_ms, sharpness, file".into(),
            };
            let [id, ts, sharp, file] = cols[..] else { bail!(bad()) };
            let pixels = image::open(work.join(KEYFRAME_DIR).join(file))
                .with_context(|| format!("decoding key frame {file}"))?
                .to_luma8();
            let mut frame = Frame::new(id.parse().map_err(|_| bad())?, ts.parse().map_err(|_| bad())?, tag, pixels);
            frame.sharpness = sharp.parse().ok();
            frames.push(frame);
        }
        counts.push((tag, frames_read, frames.len() - before));
    }
    Ok((frames, counts))
}

/// Raw descriptors of every key frame, then one PCA over all of them.
pub fn featurize(frames: &[Frame], config: &AppConfig) -> Result<(PcaModel, Vec<Descriptor>)> {
    config.descriptors.validate()?;
    if frames.is_empty() {
        bail!(egoauth_core::Error::CorpusEmpty("no key frames to describe".into()));
    }
    let raw: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|f| raw_descriptor(&f.pixels, &config.descriptors))
        .collect::<Result<_, _>>()?;
    let model = fit_pca(&raw, config.descriptors.n_components)?;
    let descriptors = frames
        .iter()
        .zip(&raw)
        .map(|(f, r)| {
            Ok(Descriptor {
                frame_id: f.frame_id,
                day_tag: f.day_tag,
                timestamp_ms: f.timestamp_ms,
                vector: model.project(r)?,
            })
        })
        .collect::<Result<_, egoauth_core::Error>>()?;
    Ok((model, descriptors))
}

pub fn write_descriptors(work: &Path, model: &PcaModel, descriptors: &[Descriptor]) -> Result<()> {
    fs::write(work.join(DESCRIPTORS_FILE), format_descriptors(descriptors))?;
    fs::write(work.join(PCA_FILE), serde_json::to_string(model)?)?;
    Ok(())
}

pub fn read_pca(work: &Path) -> Result<PcaModel> {
    let path = work.join(PCA_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_descriptors(work: &Path) -> Result<Vec<Descriptor>> {
    let path = work.join(DESCRIPTORS_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_descriptors(&text, &path)?)
}

/// One timeline per day, oldest first. Several days are clustered jointly.
pub fn build_timelines(descriptors: &[Descriptor], config: &AppConfig) -> Result<Vec<TimelineModel>> {
    let mut tags: Vec<u8> = descriptors.iter().map(|d| d.day_tag).collect();
    tags.sort_unstable_by(|a, b| b.cmp(a));
    tags.dedup();
    let days: Vec<Vec<Descriptor>> = tags
        .iter()
        .map(|&t| descriptors.iter().filter(|d| d.day_tag == t).cloned().collect())
        .collect();
    Ok(match days.len() {
        0 => bail!(egoauth_core::Error::CorpusEmpty("no descriptors".into())),
        1 => vec![build_timeline(&days[0], &config.cluster)?],
        _ => build_joint_timelines(&days, &config.cluster)?,
    })
}

/// Arrangement uses the newest day; selection the two newest.
pub fn manifest_for(timelines: &[TimelineModel], descriptors: &[Descriptor]) -> CorpusManifest {
    let mut by_age: Vec<&TimelineModel> = timelines.iter().collect();
    by_age.sort_by_key(|t| t.day_tag);
    let selection = match by_age[..] {
        [today, yesterday, ..] => Some(SelectionDays {
            yesterday: yesterday.clone(),
            today: today.clone(),
        }),
        _ => None,
    };
    CorpusManifest {
        arrangement: by_age.first().map(|t| (*t).clone()),
        selection,
        frames: descriptors
            .iter()
            .map(|d| FrameAsset {
                day_tag: d.day_tag,
                frame_id: d.frame_id,
                path: Path::new(KEYFRAME_DIR).join(keyframe_name(d.day_tag, d.frame_id)),
            })
            .collect(),
    }
}

pub fn write_timelines(work: &Path, timelines: &[TimelineModel], descriptors: &[Descriptor]) -> Result<CorpusManifest> {
    for t in timelines {
        fs::write(work.join(timeline_file(t.day_tag)), t.to_json())?;
    }
    let manifest = manifest_for(timelines, descriptors);
    fs::write(work.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySummary {
    pub day_tag: u8,
    /// Frames read.
    pub k: usize,
    /// Key frames kept.
    pub k_prime: usize,
    pub segments: usize,
    pub clusters: usize,
    pub noise_frames: usize,
    pub discarded_segments: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub days: Vec<DaySummary>,
    pub raw_dims: usize,
    pub components: usize,
}

impl fmt::Display for PipelineSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.days {
            writeln!(
                f,
                "day {}: k={} k'={} segments={} clusters={} noise_frames={} discarded_segments={} candidates={}",
                d.day_tag, d.k, d.k_prime, d.segments, d.clusters, d.noise_frames, d.discarded_segments, d.candidates
            )?;
        }
        write!(f, "descriptors: {} -> {} dims", self.raw_dims, self.components)
    }
}

pub fn summarize(timeline: &TimelineModel, k: usize, k_prime: usize) -> DaySummary {
    DaySummary {
        day_tag: timeline.day_tag,
        k,
        k_prime,
        segments: timeline.segments.len(),
        clusters: timeline.segment_clusters().len(),
        noise_frames: timeline.noise_frames().count(),
        discarded_segments: timeline.discarded_segments(),
        candidates: candidates_for_arrangement(timeline).len(),
    }
}

/// Builds the summary from per-day `(day_tag, k, k')` counts and saves it.
pub fn write_summary(
    work: &Path,
    timelines: &[TimelineModel],
    counts: &[(u8, usize, usize)],
    pca: &PcaModel,
) -> Result<PipelineSummary> {
    let summary = PipelineSummary {
        days: timelines
            .iter()
            .map(|t| {
                let (_, k, kp) = counts.iter().find(|c| c.0 == t.day_tag).copied().unwrap_or_default();
                summarize(t, k, kp)
            })
            .collect(),
        raw_dims: pca.input_len(),
        components: pca.n_components(),
    };
    fs::write(work.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub summary: PipelineSummary,
    pub timelines: Vec<TimelineModel>,
    pub descriptors: Vec<Descriptor>,
    pub pca: PcaModel,
    pub manifest: CorpusManifest,
}

/// Runs every stage over `days` and writes all artifacts into `work`.
pub fn run_pipeline(days: &[DayInput], config: &AppConfig, work: &Path) -> Result<PipelineOutput> {
    config.validate()?;
    if days.is_empty() {
        bail!(egoauth_core::Error::CorpusEmpty("no input days".into()));
    }
    fs::create_dir_all(work).with_context(|| format!("creating {}", work.display()))?;
    let mut counts = Vec::new();
    let mut frames = Vec::new();
    let mut ordered: Vec<&DayInput> = days.iter().collect();
    ordered.sort_by(|a, b| b.day_tag.cmp(&a.day_tag));
    for day in ordered {
        let (k, kept) = ingest_day(day, &config.ingest)?;
        write_keyframes(work, day.day_tag, k, &kept)?;
        counts.push((day.day_tag, k, kept.len()));
        frames.extend(kept);
    }
    let (pca, descriptors) = featurize(&frames, config)?;
    drop(frames);
    write_descriptors(work, &pca, &descriptors)?;
    let timelines = build_timelines(&descriptors, config)?;
    let manifest = write_timelines(work, &timelines, &descriptors)?;
    let summary = write_summary(work, &timelines, &counts, &pca)?;
    Ok(PipelineOutput {
        summary,
        timelines,
        descriptors,
        pca,
        manifest,
    })
}
