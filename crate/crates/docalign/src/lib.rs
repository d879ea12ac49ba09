//! File formats and experiment commands around [`docalign_core`].
//!
//! Everything here touches the file system: feature tables, corpus and label
//! JSONL, checkpoints, reports, and the per-subcommand drivers used by the
//! `docalign` binary.

pub mod checkpoint;
pub mod commands;
pub mod dataset;
mod error;
pub mod features;
pub mod reports;

pub use crate::error::{Error, Result, EXIT_CONFIG, EXIT_NUMERIC};
pub use docalign_core as core;
