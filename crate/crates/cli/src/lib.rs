//! Command-line orchestration: the video pipeline, synthetic corpora and
//! attacker simulation.

pub mod attack;
pub mod config;
pub mod pipeline;
pub mod synth;

pub use attack::{simulate_attacker, AttackConfig, AttackReport, AttackerKind, AttackerProfile, LatencyModel};
pub use config::{AppConfig, ConfigError};
pub use pipeline::{discover_days, run_pipeline, DayInput, PipelineOutput, PipelineSummary};
pub use synth::{make_synthetic_corpus, GroundTruth, SyntheticScenePlan};
