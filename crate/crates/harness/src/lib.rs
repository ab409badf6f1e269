//! Coverage studies for the fiducial samplers in `gfi_core`, and the `gfi`
//! command-line tool.
//!
//! A study is described by a [`spec::StudySpec`] (JSON), run by
//! [`studies::run_study`] and emitted as tidy [`record`] tables for external
//! plotting.

use std::path::Path;

use thiserror::Error;

pub mod cli;
pub mod data;
pub mod record;
pub mod spec;
pub mod studies;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] gfi_core::GfiError),

    #[error("invalid study spec: {0}")]
    Spec(String),

    #[error("bad input data: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io(format!("{}: {e}", path.display()))
    }
}
