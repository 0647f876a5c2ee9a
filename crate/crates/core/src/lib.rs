//! Turns first-person video frames into time-aware image challenges.
//!
//! The pipeline runs in four stages, each in its own module:
//!
//! 1. [`ingest`] loads frame sequences, scores sharpness and keeps key frames.
//! 2. [`descriptors`] computes CENTRIST and PHOG per key frame and reduces the
//!    concatenation with a per-corpus PCA.
//! 3. [`timeline`] segments the descriptor sequence, clusters frames with
//!    DBSCAN and labels segments.
//! 4. [`challenges`] builds image-arrangement and image-selection challenges
//!    from one or two timelines and scores submitted answers.

pub mod challenges;
pub mod descriptors;
pub mod error;
pub mod ingest;
pub mod stats;
pub mod timeline;

pub use error::{Error, Result};
