//! On-disk formats. Everything an operator touches is line-oriented text
//! (datasets, configs, stats, fold maps, flat key/value with one section
//! level) except checkpoints, which are a small versioned binary blob.
//! Floats round-trip exactly through their shortest decimal form.

mod checkpoint;
mod configfile;
mod dataset;
mod logs;
mod manifest;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use configfile::{
    cohort_from_str, cohort_to_string, folds_from_str, folds_to_string, parse_kv, shift_from_str,
    shift_to_string, stats_from_str, stats_to_string, KvSection,
};
pub use dataset::{read_dataset, write_dataset, Dataset};
pub use logs::{read_train_log, write_train_log};
pub use manifest::{hash_file, ArtifactRef, RunManifest};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("artifact {path} failed verification: {reason}")]
    Verification { path: String, reason: String },
}

impl IoError {
    pub(crate) fn malformed(path: &str, line: usize, msg: impl Into<String>) -> Self {
        IoError::Malformed {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn parse_f64(path: &str, line: usize, s: &str) -> Result<f64, IoError> {
    s.parse()
        .map_err(|_| IoError::malformed(path, line, format!("bad number {s:?}")))
}
