//! Frame loading, sharpness scoring and key-frame selection.

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::{DynamicImage, GrayImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Name of the optional timestamp sidecar inside a frame directory.
pub const INDEX_FILE: &str = "index.tsv";

/// Length of the uniform low-pass filter used by the blur estimate.
const BLUR_TAPS: usize = 9;

/// One timestamped, normalized video frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub frame_id: u64,
    pub timestamp_ms: u64,
    /// 0 = today, 1 = yesterday, ...
    pub day_tag: u8,
    pub pixels: GrayImage,
    pub sharpness: Option<f64>,
    pub has_fixation: bool,
    /// File the frame was decoded from, if any.
    pub source: Option<PathBuf>,
}

impl Frame {
    pub fn new(frame_id: u64, timestamp_ms: u64, day_tag: u8, pixels: GrayImage) -> Self {
        Frame {
            frame_id,
            timestamp_ms,
            day_tag,
            pixels,
            sharpness: None,
            has_fixation: false,
            source: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixation {
    pub timestamp_ms: u64,
    pub duration_ms: u64,
}

impl Fixation {
    /// Closed interval membership.
    pub fn covers(&self, timestamp_ms: u64) -> bool {
        timestamp_ms >= self.timestamp_ms && timestamp_ms <= self.timestamp_ms + self.duration_ms
    }
}

/// Precomputed gaze fixations, sorted by start time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixationLog {
    entries: Vec<Fixation>,
}

impl FixationLog {
    pub fn new(entries: Vec<Fixation>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|f| f.duration_ms == 0) {
            return Err(Error::Config(format!(
                "fixation at {} ms has zero duration",
                bad.timestamp_ms
            )));
        }
        if entries.windows(2).any(|w| w[0].timestamp_ms > w[1].timestamp_ms) {
            return Err(Error::Config("fixations are not sorted by timestamp".into()));
        }
        Ok(FixationLog { entries })
    }

    pub fn entries(&self) -> &[Fixation] {
        &self.entries
    }

    pub fn covers(&self, timestamp_ms: u64) -> bool {
        // Entries are sorted by start, so only those starting at or before t matter.
        let end = self
            .entries
            .partition_point(|f| f.timestamp_ms <= timestamp_ms);
        self.entries[..end].iter().any(|f| f.covers(timestamp_ms))
    }

    /// Reads a CSV file with header `timestamp_ms,duration_ms`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, path)
    }

    fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim() == "timestamp_ms,duration_ms" => {}
            Some((i, other)) => {
                return Err(parse_err(i + 1, format!("unexpected header {other:?}")));
            }
            None => return Ok(FixationLog::default()),
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            let mut cols = line.split(',').map(str::trim);
            let (Some(t), Some(d), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(parse_err(i + 1, "expected two columns".into()));
            };
            let timestamp_ms = t
                .parse()
                .map_err(|e| parse_err(i + 1, format!("timestamp_ms: {e}")))?;
            let duration_ms = d
                .parse()
                .map_err(|e| parse_err(i + 1, format!("duration_ms: {e}")))?;
            entries.push(Fixation {
                timestamp_ms,
                duration_ms,
            });
        }
        FixationLog::new(entries)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp_ms,duration_ms\n");
        for f in &self.entries {
            out.push_str(&format!("{},{}\n", f.timestamp_ms, f.duration_ms));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Keep frames captured during a gaze fixation.
    Fixation,
    /// Keep frames at least as sharp as the corpus median.
    BlurMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub working_width: u32,
    pub working_height: u32,
    pub selection_mode: SelectionMode,
    pub day_tag: u8,
    /// Frame rate assumed when a directory has no timestamp sidecar.
    pub fps: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            working_width: 320,
            working_height: 180,
            selection_mode: SelectionMode::BlurMedian,
            day_tag: 0,
            fps: 5.0,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.working_width == 0 || self.working_height == 0 {
            return Err(Error::Config("working resolution must be positive".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        Ok(())
    }
}

/// ITU-R BT.601 luma with integer rounding.
pub fn to_luma601(image: &DynamicImage) -> GrayImage {
    if let DynamicImage::ImageLuma8(gray) = image {
        return gray.clone();
    }
    let rgb = image.to_rgb8();
    GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
        let [r, g, b] = rgb.get_pixel(x, y).0;
        let y = (299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000;
        image::Luma([y as u8])
    })
}

/// Bilinear resize to the working resolution; a no-op when already there.
pub fn normalize(gray: GrayImage, width: u32, height: u32) -> GrayImage {
    if gray.dimensions() == (width, height) {
        gray
    } else {
        imageops::resize(&gray, width, height, FilterType::Triangle)
    }
}

fn is_frame_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// Lists frame images in lexicographic filename order.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_frame_file(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn read_index(path: &Path, count: usize) -> Result<Vec<u64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut stamps = vec![None; count];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (id, ts) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected frame_id<TAB>timestamp_ms".into()))?;
        let id: usize = id.trim().parse().map_err(|e| parse_err(format!("frame_id: {e}")))?;
        let ts: u64 = ts
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("timestamp_ms: {e}")))?;
        let slot = stamps
            .get_mut(id)
            .ok_or_else(|| parse_err(format!("frame_id {id} out of range (have {count} frames)")))?;
        *slot = Some(ts);
    }
    let stamps: Vec<u64> = stamps
        .into_iter()
        .enumerate()
        .map(|(id, ts)| {
            ts.ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("no timestamp for frame {id}"),
            })
        })
        .collect::<Result<_>>()?;
    if stamps.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "timestamps decrease".into(),
        });
    }
    Ok(stamps)
}

/// Loads every frame of a directory, normalized to the working resolution.
///
/// Frame ids follow filename order. Timestamps come from `index.tsv` when
/// present, otherwise from uniform spacing at `config.fps`.
pub fn load_frames(dir: &Path, config: &IngestConfig) -> Result<Vec<Frame>> {
    config.validate()?;
    let files = list_frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::CorpusEmpty(format!("no frame images in {}", dir.display())));
    }
    let index_path = dir.join(INDEX_FILE);
    let timestamps = if index_path.exists() {
        read_index(&index_path, files.len())?
    } else {
        let step = 1000.0 / config.fps;
        (0..files.len())
            .map(|i| (i as f64 * step).round() as u64)
            .collect()
    };

    files
        .par_iter()
        .zip(timestamps.par_iter())
        .enumerate()
        .map(|(i, (path, &ts))| {
            let decoded = image::open(path).map_err(|e| Error::Decode {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let gray = normalize(
                to_luma601(&decoded),
                config.working_width,
                config.working_height,
            );
            let mut frame = Frame::new(i as u64, ts, config.day_tag, gray);
            frame.source = Some(path.clone());
            Ok(frame)
        })
        .collect()
}

/// Box-filter window sums along one axis with replicated borders. Sums stay
/// integral so later differences are exact.
fn box_sums_axis(src: &[f64], width: usize, height: usize, vertical: bool) -> Vec<f64> {
    let half = (BLUR_TAPS / 2) as isize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for d in -half..=half {
                let (sx, sy) = if vertical {
                    (x, (y as isize + d).clamp(0, height as isize - 1) as usize)
                } else {
                    ((x as isize + d).clamp(0, width as isize - 1) as usize, y)
                };
                acc += src[sy * width + sx];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Fraction of neighbor variation that survives a strong low-pass along one axis.
/// `None` when the image has no variation along that axis.
fn blur_along(original: &[f64], sums: &[f64], width: usize, height: usize, vertical: bool) -> Option<f64> {
    let (mut total, mut lost) = (0.0, 0.0);
    let (dx, dy) = if vertical { (0, 1) } else { (1, 0) };
    for y in dy..height {
        for x in dx..width {
            let i = y * width + x;
            let j = (y - dy) * width + (x - dx);
            let d_orig = (original[i] - original[j]).abs();
            let d_blur = (sums[i] - sums[j]).abs() / BLUR_TAPS as f64;
            total += d_orig;
            lost += (d_orig - d_blur).max(0.0);
        }
    }
    (total > 0.0).then(|| (total - lost) / total)
}

/// No-reference sharpness in `[0, 1]`, one minus the Crete et al. blur estimate.
///
/// The blur estimate compares neighbor differences before and after a 9-tap
/// box blur along each axis: a sharp image loses most of its variation, a
/// blurred one loses little. Images without any variation score 0.
pub fn score_sharpness(pixels: &GrayImage) -> Result<f64> {
    let (w, h) = (pixels.width() as usize, pixels.height() as usize);
    if w < BLUR_TAPS || h < BLUR_TAPS {
        return Err(Error::DegenerateInput(format!(
            "{w}x{h} frame is smaller than the {BLUR_TAPS}-tap blur support"
        )));
    }
    let src: Vec<f64> = pixels.as_raw().iter().map(|&v| v as f64).collect();
    let vert = box_sums_axis(&src, w, h, true);
    let horz = box_sums_axis(&src, w, h, false);
    let blur = [
        blur_along(&src, &vert, w, h, true),
        blur_along(&src, &horz, w, h, false),
    ]
    .into_iter()
    .flatten()
    .reduce(f64::max);
    Ok(match blur {
        Some(b) => (1.0 - b).clamp(0.0, 1.0),
        None => 0.0,
    })
}

/// Keeps the informative subset of `frames`, in order.
///
/// In fixation mode a frame survives when its timestamp lies in any closed
/// fixation interval. In blur-median mode every frame is scored and those
/// with sharpness at or above the median survive.
pub fn select_keyframes(
    mut frames: Vec<Frame>,
    fixations: Option<&FixationLog>,
    config: &IngestConfig,
) -> Result<Vec<Frame>> {
    if frames.is_empty() {
        return Err(Error::CorpusEmpty("no frames to select from".into()));
    }
    let kept: Vec<Frame> = match config.selection_mode {
        SelectionMode::Fixation => {
            let log = fixations.ok_or_else(|| {
                Error::Config("fixation selection requires a fixation log".into())
            })?;
            frames
                .into_iter()
                .filter_map(|mut f| {
                    f.has_fixation = log.covers(f.timestamp_ms);
                    f.has_fixation.then_some(f)
                })
                .collect()
        }
        SelectionMode::BlurMedian => {
            frames.par_iter_mut().try_for_each(|f| -> Result<()> {
                if f.sharpness.is_none() {
                    f.sharpness = Some(score_sharpness(&f.pixels)?);
                }
                Ok(())
            })?;
            let scores: Vec<f64> = frames.iter().filter_map(|f| f.sharpness).collect();
            let cutoff = stats::median(&scores).expect("non-empty");
            frames
                .into_iter()
                .filter(|f| f.sharpness.is_some_and(|s| s >= cutoff))
                .collect()
        }
    };
    if kept.is_empty() {
        return Err(Error::CorpusEmpty("every frame was filtered out".into()));
    }
    Ok(kept)
}
