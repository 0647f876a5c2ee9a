use std::path::Path;

use egoauth_authsvc::ServiceConfig;
use egoauth_core::descriptors::DescriptorConfig;
use egoauth_core::ingest::IngestConfig;
use egoauth_core::timeline::ClusterConfig;
use serde::{Deserialize, Serialize};

/// A configuration problem: bad file, bad value, bad flag combination.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Everything one TOML file can set. Unlisted keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub seed: Option<u64>,
    pub ingest: IngestConfig,
    pub descriptors: DescriptorConfig,
    pub cluster: ClusterConfig,
    pub service: ServiceConfig,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |e: &dyn std::fmt::Display| ConfigError(e.to_string());
        self.ingest.validate().map_err(|e| err(&e))?;
        self.descriptors.validate().map_err(|e| err(&e))?;
        self.cluster.validate().map_err(|e| err(&e))?;
        self.service.validate().map_err(|e| err(&e))?;
        Ok(())
    }

    /// `--seed` wins over the file; the service follows the same seed.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if seed.is_some() {
            self.seed = seed;
        }
        if self.service.rng_seed.is_none() {
            self.service.rng_seed = self.seed;
        }
        self
    }
}
