//! Scene descriptors: CENTRIST and PHOG, concatenated and PCA-reduced.

mod census;
mod pca;
mod phog;

use std::fmt::Write as _;
use std::path::Path;

use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Frame;

pub use census::{census_transform, centrist, pyramid_blocks, CENSUS_BINS};
pub use pca::{fit_pca, PcaModel};
pub use phog::{canny, orientation, phog, sobel, Gradient};

/// Reduced feature vector of one key frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub frame_id: u64,
    pub day_tag: u8,
    pub timestamp_ms: u64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescriptorConfig {
    pub centrist_levels: u32,
    pub phog_levels: u32,
    pub phog_bins: usize,
    pub phog_angle_range: u32,
    pub n_components: usize,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            centrist_levels: 2,
            phog_levels: 3,
            phog_bins: 9,
            phog_angle_range: 180,
            n_components: 100,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.centrist_levels == 0
            || self.phog_levels == 0
            || self.phog_bins == 0
            || self.n_components == 0
        {
            return Err(Error::Config("descriptor parameters must be positive".into()));
        }
        if self.phog_angle_range != 180 && self.phog_angle_range != 360 {
            return Err(Error::Config(format!(
                "phog_angle_range must be 180 or 360, got {}",
                self.phog_angle_range
            )));
        }
        Ok(())
    }

    /// Length of the concatenated CENTRIST and PHOG vector.
    pub fn raw_len(&self) -> usize {
        pyramid_blocks(self.centrist_levels) * CENSUS_BINS
            + pyramid_blocks(self.phog_levels) * self.phog_bins
    }
}

/// CENTRIST followed by PHOG for one image.
pub fn raw_descriptor(pixels: &GrayImage, config: &DescriptorConfig) -> Result<Vec<f64>> {
    let mut v = centrist(pixels, config.centrist_levels)?;
    v.extend(phog(
        pixels,
        config.phog_levels,
        config.phog_bins,
        config.phog_angle_range,
    )?);
    Ok(v)
}

/// Describes every frame and fits a PCA on this corpus alone.
///
/// Descriptors come back in input order.
pub fn featurize_corpus(
    frames: &[Frame],
    config: &DescriptorConfig,
) -> Result<(PcaModel, Vec<Descriptor>)> {
    config.validate()?;
    if frames.is_empty() {
        return Err(Error::CorpusEmpty("no key frames to describe".into()));
    }
    let raw: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|f| raw_descriptor(&f.pixels, config))
        .collect::<Result<_>>()?;
    let model = fit_pca(&raw, config.n_components)?;
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
        .collect::<Result<_>>()?;
    Ok((model, descriptors))
}

/// Text archive: a `n_frames<TAB>n_components` header, then one row per
/// frame with `frame_id`, `day_tag`, `timestamp_ms` and the space-separated
/// values in shortest round-trip form.
pub fn format_descriptors(descriptors: &[Descriptor]) -> String {
    let dims = descriptors.first().map_or(0, |d| d.vector.len());
    let mut out = format!("{}\t{}\n", descriptors.len(), dims);
    for d in descriptors {
        let _ = write!(out, "{}\t{}\t{}\t", d.frame_id, d.day_tag, d.timestamp_ms);
        for (i, v) in d.vector.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_descriptors(text: &str, path: &Path) -> Result<Vec<Descriptor>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let (n, dims) = header
        .split_once('\t')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| err(1, format!("bad header {header:?}")))?;
    let mut out = Vec::with_capacity(n);
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        if cols.len() != 4 {
            return Err(err(i + 1, "expected four tab-separated columns".into()));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse().map_err(|e| err(i + 1, format!("{what}: {e}")))
        };
        let vector: Vec<f64> = if cols[3].is_empty() {
            Vec::new()
        } else {
            cols[3]
                .split(' ')
                .map(|v| v.parse().map_err(|e| err(i + 1, format!("value: {e}"))))
                .collect::<Result<_>>()?
        };
        if vector.len() != dims {
            return Err(err(i + 1, format!("expected {dims} values, got {}", vector.len())));
        }
        out.push(Descriptor {
            frame_id: num(cols[0], "frame_id")?,
            day_tag: num(cols[1], "day_tag")? as u8,
            timestamp_ms: num(cols[2], "timestamp_ms")?,
            vector,
        });
    }
    if out.len() != n {
        return Err(err(1, format!("header says {n} rows, found {}", out.len())));
    }
    Ok(out)
}
