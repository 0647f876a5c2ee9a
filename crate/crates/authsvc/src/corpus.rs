//! Pipeline artifacts a running service draws challenges from.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use egoauth_core::challenges::{selection_pools, SelectionPools};
use egoauth_core::timeline::TimelineModel;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const MANIFEST_FILE: &str = "corpus.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAsset {
    pub day_tag: u8,
    pub frame_id: u64,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDays {
    pub yesterday: TimelineModel,
    pub today: TimelineModel,
}

/// What `corpus.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub arrangement: Option<TimelineModel>,
    pub selection: Option<SelectionDays>,
    pub frames: Vec<FrameAsset>,
}

impl CorpusManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: CorpusManifest = serde_json::from_str(&text)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for f in &mut manifest.frames {
            if f.path.is_relative() {
                f.path = base.join(&f.path);
            }
        }
        Ok(manifest)
    }
}

/// A manifest prepared for serving: selection pools are computed once.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub arrangement: Option<TimelineModel>,
    pub selection: Option<SelectionPools>,
    frames: BTreeMap<(u8, u64), PathBuf>,
}

impl Corpus {
    pub fn image_path(&self, day_tag: u8, frame_id: u64) -> Option<&Path> {
        self.frames.get(&(day_tag, frame_id)).map(PathBuf::as_path)
    }
}

impl From<CorpusManifest> for Corpus {
    fn from(m: CorpusManifest) -> Self {
        Corpus {
            arrangement: m.arrangement,
            selection: m.selection.map(|d| selection_pools(&d.yesterday, &d.today)),
            frames: m
                .frames
                .into_iter()
                .map(|f| ((f.day_tag, f.frame_id), f.path))
                .collect(),
        }
    }
}
