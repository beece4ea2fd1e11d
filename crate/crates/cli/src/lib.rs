//! Batch frontend over `roiaug-core`.
//!
//! Each command is a stage over a manifest file: `validate`, `preprocess`,
//! `split`, `augment`, `evaluate` and `report`. Every stage that writes a
//! directory also drops a `run.json` there which [`replay`] can re-execute.

mod commands;
mod config;
mod error;

pub use commands::{replay, run, AUGMENTED_MANIFEST, MANIFEST, PLAN, RUN};
pub use config::{Command, RunConfig};
pub use error::{exit, CliError};
