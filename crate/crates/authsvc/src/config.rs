use std::path::{Path, PathBuf};

use egoauth_core::challenges::AcceptanceThreshold;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnExceed {
    Lock,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockoutPolicy {
    pub max_attempts: u32,
    pub max_entry_time_ms: u64,
    pub on_exceed: OnExceed,
}

impl Default for LockoutPolicy {
    fn default() -> Self {
        LockoutPolicy {
            max_attempts: 10,
            max_entry_time_ms: 300_000,
            on_exceed: OnExceed::Lock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Credential a device must present to pair. Stands in for real device pairing.
    pub pairing_credential: String,
    pub n_images: usize,
    /// Fixed selection grid size, for reproducing the eight-image mode.
    pub force_length: Option<usize>,
    pub selection_threshold: AcceptanceThreshold,
    pub lockout: LockoutPolicy,
    pub rng_seed: Option<u64>,
    pub event_log: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    /// Corpus name to manifest path.
    pub corpora: std::collections::BTreeMap<String, PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            pairing_credential: "pair-me".into(),
            n_images: 4,
            force_length: None,
            selection_threshold: AcceptanceThreshold::EXACT,
            lockout: LockoutPolicy::default(),
            rng_seed: None,
            event_log: None,
            snapshot: None,
            corpora: Default::default(),
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lockout.max_attempts < 1 {
            return Err(ServiceError::Config("max_attempts must be at least 1".into()));
        }
        if self.n_images < 2 {
            return Err(ServiceError::Config("n_images must be at least 2".into()));
        }
        if self.pairing_credential.is_empty() {
            return Err(ServiceError::Config("pairing_credential is empty".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }
}
