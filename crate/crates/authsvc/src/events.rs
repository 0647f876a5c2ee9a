//! Append-only audit trail of authentication decisions.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use egoauth_core::challenges::Challenge;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Result, ServiceError};
use crate::session::SessionState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Paired {
        device_id: String,
        at_ms: u64,
    },
    ChallengeIssued {
        session_id: Uuid,
        device_id: String,
        challenge: Challenge,
        at_ms: u64,
    },
    Rendered {
        session_id: Uuid,
        challenge_id: Uuid,
        at_ms: u64,
    },
    Answered {
        session_id: Uuid,
        challenge_id: Uuid,
        attempt: u32,
        similarity: f64,
        accepted: bool,
        at_ms: u64,
    },
    StateChanged {
        session_id: Uuid,
        state: SessionState,
        at_ms: u64,
    },
    FallbackRequired {
        device_id: String,
        reason: String,
        at_ms: u64,
    },
}

pub trait EventLog: Send + Sync {
    fn append(&self, event: &Event) -> Result<()>;
}

#[derive(Debug, Default)]
pub struct NullLog;

impl EventLog for NullLog {
    fn append(&self, _: &Event) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct MemoryLog(Mutex<Vec<Event>>);

impl MemoryLog {
    pub fn events(&self) -> Vec<Event> {
        self.0.lock().unwrap().clone()
    }
}

impl EventLog for MemoryLog {
    fn append(&self, event: &Event) -> Result<()> {
        self.0.lock().unwrap().push(event.clone());
        Ok(())
    }
}

/// One JSON object per line, flushed after every event.
#[derive(Debug)]
pub struct JsonlLog {
    path: PathBuf,
    out: Mutex<BufWriter<File>>,
}

impl JsonlLog {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| ServiceError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(JsonlLog {
            path: path.to_path_buf(),
            out: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn read_all(path: &Path) -> Result<Vec<Event>> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| ServiceError::Config(e.to_string())))
            .collect()
    }
}

impl EventLog for JsonlLog {
    fn append(&self, event: &Event) -> Result<()> {
        let line = serde_json::to_string(event).expect("event serializes");
        let mut out = self.out.lock().unwrap();
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(|source| ServiceError::Io {
                path: self.path.clone(),
                source,
            })
    }
}
