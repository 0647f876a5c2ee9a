//! Procedural egocentric "videos" with known scene structure.
//!
//! Every scene is a distinct texture over a fixed grain. Each frame adds a
//! little sensor noise, so frames of one scene are near but never identical.
//! Blank (lens covered) and heavily blurred frames can be injected. The
//! ground truth written next to the frames says which frame shows what.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use egoauth_core::ingest::{Fixation, FixationLog, INDEX_FILE};
use image::{GrayImage, Luma};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const FIXATIONS_FILE: &str = "fixations.csv";

/// Gray levels between the texture's extremes and the mean.
const TEXTURE_GAIN: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TextureKind {
    Grating { angle_deg: f64, period: f64 },
    Checker { cell: f64 },
    Rings { period: f64 },
    Crosshatch { period: f64 },
    Dots { spacing: f64 },
    Zigzag { period: f64 },
    Bricks { width: f64, height: f64 },
}

impl TextureKind {
    /// Pattern value in `[-1, 1]` at a point.
    fn sample(&self, x: f64, y: f64, w: f64, h: f64) -> f64 {
        let wave = |s: f64, period: f64| (2.0 * PI * s / period).sin();
        match *self {
            TextureKind::Grating { angle_deg, period } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                wave(x * c + y * s, period)
            }
            TextureKind::Checker { cell } => {
                let parity = ((x / cell).floor() + (y / cell).floor()) as i64;
                if parity.rem_euclid(2) == 0 { 0.8 } else { -0.8 }
            }
            TextureKind::Rings { period } => wave(((x - w / 2.0).powi(2) + (y - h / 2.0).powi(2)).sqrt(), period),
            TextureKind::Crosshatch { period } => {
                0.5 * (wave(x + y, period) + wave(x - y, period * 1.5))
            }
            TextureKind::Dots { spacing } => {
                let (fx, fy) = ((x / spacing).fract() - 0.5, (y / spacing).fract() - 0.5);
                if fx * fx + fy * fy < 0.09 { 0.9 } else { -0.6 }
            }
            TextureKind::Zigzag { period } => {
                let tri = |t: f64| 2.0 * (t - (t + 0.5).floor()).abs();
                wave(y + period * tri(x / period), period)
            }
            TextureKind::Bricks { width, height } => {
                let row = (y / height).floor();
                let shift = if row as i64 % 2 == 0 { 0.0 } else { width / 2.0 };
                let (bx, by) = (((x + shift) / width).fract(), (y / height).fract());
                if bx < 0.08 || by < 0.12 { -0.9 } else { 0.4 + 0.3 * wave(x, width) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_id: String,
    pub texture: TextureKind,
    /// Frames rendered per occurrence.
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybackItem {
    pub scene_id: String,
    pub day_tag: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    /// Constant dark frame, as with a covered lens.
    Blank,
    /// The preceding scene, box-blurred beyond recognition of edges.
    Blur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    /// Playback index the frames follow.
    pub after: usize,
    pub kind: InjectionKind,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenePlan {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    /// Per-frame sensor noise, in gray levels.
    pub noise_sigma: f64,
    /// Every `quiet_every`-th frame of an occurrence (starting with the
    /// first) carries half the sensor noise, as when the camera's gain
    /// settles. 0 turns this off.
    pub quiet_every: usize,
    /// Static surface grain of each scene, in gray levels. It is the same in
    /// every frame of a scene, so it gives flat regions texture without
    /// adding frame-to-frame variation.
    pub grain_sigma: f64,
    /// Peak displacement of a slow camera sway, in pixels. Off in the built-in
    /// plans: sub-pixel motion of hard texture edges swamps the census
    /// histograms and breaks scenes apart.
    pub sway_px: f64,
    pub scenes: Vec<SceneSpec>,
    pub playback: Vec<PlaybackItem>,
    pub injections: Vec<Injection>,
}

fn scene(id: &str, texture: TextureKind, frames: usize) -> SceneSpec {
    SceneSpec {
        scene_id: id.into(),
        texture,
        frames,
    }
}

/// Ten textures that differ in both intensity structure and edge orientation.
fn palette(frames: usize) -> Vec<SceneSpec> {
    use TextureKind::*;
    vec![
        scene("A", Grating { angle_deg: 0.0, period: 18.0 }, frames),
        scene("B", Checker { cell: 22.0 }, frames),
        scene("C", Rings { period: 26.0 }, frames),
        scene("D", Grating { angle_deg: 60.0, period: 11.0 }, frames),
        scene("E", Crosshatch { period: 15.0 }, frames),
        scene("F", Dots { spacing: 24.0 }, frames),
        scene("G", Zigzag { period: 20.0 }, frames),
        scene("H", Bricks { width: 40.0, height: 16.0 }, frames),
        scene("I", Grating { angle_deg: 120.0, period: 30.0 }, frames),
        scene("J", Checker { cell: 9.0 }, frames),
    ]
}

fn items(day_tag: u8, ids: &[&str]) -> Vec<PlaybackItem> {
    ids.iter()
        .map(|id| PlaybackItem {
            scene_id: id.to_string(),
            day_tag,
        })
        .collect()
}

impl SyntheticScenePlan {
    fn with(playback: Vec<PlaybackItem>, injections: Vec<Injection>) -> Self {
        SyntheticScenePlan {
            width: 320,
            height: 180,
            fps: 5.0,
            noise_sigma: 3.0,
            quiet_every: 4,
            grain_sigma: 30.0,
            sway_px: 0.0,
            scenes: palette(20),
            playback,
            injections,
        }
    }

    /// One day: A, B, C, three blank frames, D, B again, E, F.
    pub fn recurring_day() -> Self {
        Self::with(
            items(0, &["A", "B", "C", "D", "B", "E", "F"]),
            vec![Injection {
                after: 2,
                kind: InjectionKind::Blank,
                count: 3,
            }],
        )
    }

    /// One day of six distinct scenes.
    pub fn six_scenes() -> Self {
        Self::with(items(0, &["A", "B", "C", "D", "E", "F"]), Vec::new())
    }

    /// Yesterday (day 1) and today (day 0); C and D are seen on both days.
    pub fn two_days() -> Self {
        let mut playback = items(1, &["A", "B", "C", "D", "E", "G"]);
        playback.extend(items(0, &["C", "F", "H", "D", "I", "J"]));
        Self::with(playback, Vec::new())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "recurring" => Self::recurring_day(),
            "six" => Self::six_scenes(),
            "two-days" => Self::two_days(),
            other => bail!("unknown plan {other:?} (recurring, six, two-days)"),
        })
    }

    pub fn validate(&self, min_points: usize) -> Result<()> {
        ensure!(!self.playback.is_empty(), "playback is empty");
        ensure!(self.width >= 16 && self.height >= 16, "frames too small");
        ensure!(self.fps > 0.0, "fps must be positive");
        for s in &self.scenes {
            ensure!(
                s.frames > min_points,
                "scene {} has {} frames; needs more than min_points = {min_points}",
                s.scene_id,
                s.frames
            );
        }
        for p in &self.playback {
            ensure!(self.spec(&p.scene_id).is_some(), "unknown scene {}", p.scene_id);
        }
        for inj in &self.injections {
            ensure!(inj.after < self.playback.len(), "injection after {} is out of range", inj.after);
        }
        let mut days: Vec<u8> = self.playback.iter().map(|p| p.day_tag).collect();
        days.dedup();
        let mut sorted = days.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        sorted.dedup();
        ensure!(days == sorted, "playback must run oldest day first, one block per day");
        Ok(())
    }

    fn spec(&self, id: &str) -> Option<&SceneSpec> {
        self.scenes.iter().find(|s| s.scene_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameTruth {
    Scene { scene_id: String, occurrence: usize },
    Blank,
    Blur,
}

impl FrameTruth {
    pub fn scene(&self) -> Option<&str> {
        match self {
            FrameTruth::Scene { scene_id, .. } => Some(scene_id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayTruth {
    pub day_tag: u8,
    /// Directory of this day's frames, relative to the corpus root.
    pub dir: PathBuf,
    /// Indexed by frame id.
    pub frames: Vec<FrameTruth>,
    /// Frame ids that start a new run (scene occurrence or injected block).
    pub boundaries: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    /// Oldest day first.
    pub days: Vec<DayTruth>,
}

impl GroundTruth {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(GROUND_TRUTH_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn day(&self, day_tag: u8) -> Option<&DayTruth> {
        self.days.iter().find(|d| d.day_tag == day_tag)
    }
}

enum Render {
    Scene {
        texture: TextureKind,
        /// Everything that does not change between frames of the scene.
        surface: Arc<Vec<f32>>,
        local: usize,
        total: usize,
    },
    Blank,
    Blur(Box<Render>),
}

struct PlannedFrame {
    truth: FrameTruth,
    render: Render,
}

fn box_blur(img: &GrayImage, radius: i64) -> GrayImage {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let pass = |src: &GrayImage, horizontal: bool| {
        GrayImage::from_fn(w as u32, h as u32, |x, y| {
            let mut sum = 0u32;
            for d in -radius..=radius {
                let (sx, sy) = if horizontal {
                    ((x as i64 + d).clamp(0, w - 1), y as i64)
                } else {
                    (x as i64, (y as i64 + d).clamp(0, h - 1))
                };
                sum += src.get_pixel(sx as u32, sy as u32).0[0] as u32;
            }
            Luma([(sum / (2 * radius as u32 + 1)) as u8])
        })
    };
    pass(&pass(img, true), false)
}

/// Sum of four uniforms on [-1/2, 1/2) drawn from one 64-bit word: mean 0,
/// variance 1/3, bell shaped. Cheap stand-in for Gaussian sensor noise.
fn uniform_sum(rng: &mut ChaCha8Rng) -> f64 {
    let word = rng.next_u64();
    let sum: u64 = (0..4).map(|i| (word >> (16 * i)) & 0xFFFF).sum();
    sum as f64 / 65536.0 - 2.0
}

impl SyntheticScenePlan {
    fn render(&self, r: &Render, rng: &mut ChaCha8Rng) -> GrayImage {
        let (w, h) = (self.width as f64, self.height as f64);
        match r {
            Render::Blank => GrayImage::from_pixel(self.width, self.height, Luma([16])),
            Render::Blur(inner) => box_blur(&self.render(inner, rng), 8),
            Render::Scene { texture, surface, local, total } => {
                let phase = 2.0 * PI * *local as f64 / (*total).max(1) as f64;
                let (dx, dy) = (self.sway_px * phase.sin(), 0.5 * self.sway_px * phase.cos());
                // Scale the unit-variance sum of four centred uniforms to sigma.
                let quiet = self.quiet_every > 0 && local % self.quiet_every == 0;
                let noise_scale = self.noise_sigma * 3f64.sqrt() * if quiet { 0.5 } else { 1.0 };
                let pixels = surface
                    .iter()
                    .enumerate()
                    .map(|(i, &base)| {
                        let mut value = base as f64 + noise_scale * uniform_sum(rng);
                        if self.sway_px != 0.0 {
                            let (x, y) = ((i % self.width as usize) as f64, (i / self.width as usize) as f64);
                            value += TEXTURE_GAIN * texture.sample(x + dx, y + dy, w, h);
                        }
                        (value.clamp(0.0, 255.0) + 0.5) as u8
                    })
                    .collect();
                GrayImage::from_raw(self.width, self.height, pixels).expect("surface matches frame size")
            }
        }
    }

    /// Mean level, vertical shading and grain of one scene, plus its texture
    /// when the camera holds still.
    fn surface(&self, texture: &TextureKind, rng: &mut ChaCha8Rng) -> Vec<f32> {
        let (w, h) = (self.width as f64, self.height as f64);
        let grain = Normal::new(0.0, self.grain_sigma.max(1e-9)).expect("finite sigma");
        let mut out = Vec::with_capacity((self.width * self.height) as usize);
        for y in 0..self.height {
            let shade = 60.0 * 0.15 * (y as f64 / h - 0.5);
            for x in 0..self.width {
                let mut v = 128.0 + shade + grain.sample(rng);
                if self.sway_px == 0.0 {
                    v += TEXTURE_GAIN * texture.sample(x as f64, y as f64, w, h);
                }
                out.push(v as f32);
            }
        }
        out
    }
}

/// Renders `plan` under `root` (one `day{tag}` directory per day with frames,
/// `index.tsv` and `fixations.csv`) and writes `ground_truth.json`.
///
/// The fixation log covers every frame, so fixation-mode ingestion keeps the
/// whole stream, injected frames included.
pub fn make_synthetic_corpus(plan: &SyntheticScenePlan, seed: u64, root: &Path) -> Result<GroundTruth> {
    plan.validate(0)?;
    let step_ms = 1000.0 / plan.fps;
    let mut days: Vec<(u8, Vec<PlannedFrame>)> = Vec::new();
    let mut occurrences: std::collections::BTreeMap<&str, usize> = Default::default();
    let surfaces: BTreeMap<String, Arc<Vec<f32>>> = plan
        .scenes
        .iter()
        .enumerate()
        .map(|(idx, spec)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX - idx as u64);
            (spec.scene_id.clone(), Arc::new(plan.surface(&spec.texture, &mut rng)))
        })
        .collect();
    for (i, item) in plan.playback.iter().enumerate() {
        if days.last().map(|d| d.0) != Some(item.day_tag) {
            days.push((item.day_tag, Vec::new()));
        }
        let frames = &mut days.last_mut().expect("just pushed").1;
        let spec = plan.spec(&item.scene_id).expect("validated");
        let occurrence = occurrences.entry(&item.scene_id).or_default();
        for local in 0..spec.frames {
            frames.push(PlannedFrame {
                truth: FrameTruth::Scene {
                    scene_id: spec.scene_id.clone(),
                    occurrence: *occurrence,
                },
                render: Render::Scene {
                    texture: spec.texture,
                    surface: surfaces[&spec.scene_id].clone(),
                    local,
                    total: spec.frames,
                },
            });
        }
        *occurrence += 1;
        for inj in plan.injections.iter().filter(|j| j.after == i) {
            for k in 0..inj.count {
                let (truth, render) = match inj.kind {
                    InjectionKind::Blank => (FrameTruth::Blank, Render::Blank),
                    InjectionKind::Blur => (
                        FrameTruth::Blur,
                        Render::Blur(Box::new(Render::Scene {
                            texture: spec.texture,
                            surface: surfaces[&spec.scene_id].clone(),
                            local: k,
                            total: spec.frames,
                        })),
                    ),
                };
                frames.push(PlannedFrame { truth, render });
            }
        }
    }

    let mut truth_days = Vec::new();
    for (day_tag, frames) in &days {
        let rel = PathBuf::from(format!("day{day_tag}"));
        let dir = root.join(&rel);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        frames
            .par_iter()
            .enumerate()
            .try_for_each(|(i, f)| -> Result<()> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((*day_tag as u64) << 32) | i as u64);
                let path = dir.join(format!("frame_{i:05}.png"));
                plan.render(&f.render, &mut rng)
                    .save(&path)
                    .with_context(|| format!("writing {}", path.display()))
            })?;
        let stamp = |i: usize| (i as f64 * step_ms).round() as u64;
        let index: String = (0..frames.len()).map(|i| format!("{i}\t{}\n", stamp(i))).collect();
        fs::write(dir.join(INDEX_FILE), index)?;

        let mut boundaries = Vec::new();
        let mut fixations = Vec::new();
        let mut run_start = 0;
        for i in 1..=frames.len() {
            if i == frames.len() || frames[i].truth != frames[i - 1].truth {
                fixations.push(Fixation {
                    timestamp_ms: stamp(run_start),
                    duration_ms: (stamp(i - 1) - stamp(run_start)).max(1),
                });
                if i < frames.len() {
                    boundaries.push(i as u64);
                }
                run_start = i;
            }
        }
        fs::write(dir.join(FIXATIONS_FILE), FixationLog::new(fixations)?.to_csv())?;
        truth_days.push(DayTruth {
            day_tag: *day_tag,
            dir: rel,
            frames: frames.iter().map(|f| f.truth.clone()).collect(),
            boundaries,
        });
    }
    let truth = GroundTruth {
        seed,
        days: truth_days,
    };
    fs::write(root.join(GROUND_TRUTH_FILE), serde_json::to_string_pretty(&truth)?)?;
    Ok(truth)
}
