//! Login service for video-derived graphical passwords.
//!
//! A paired device asks to log in, receives a challenge built from its
//! wearer's recent video, and answers it. Wrong arrangements get a fresh
//! challenge; wrong selections keep theirs. Effort is tracked per session
//! and limited by a [`config::LockoutPolicy`].

pub mod clock;
pub mod config;
pub mod corpus;
pub mod error;
pub mod events;
pub mod http;
pub mod service;
pub mod session;
pub mod wire;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{LockoutPolicy, OnExceed, ServiceConfig};
pub use corpus::{Corpus, CorpusManifest, FrameAsset, SelectionDays};
pub use error::{Result, ServiceError};
pub use service::{AuthService, ServiceSnapshot, DEFAULT_CORPUS};
pub use session::{Metrics, PairingRecord, SessionRecord, SessionState};
