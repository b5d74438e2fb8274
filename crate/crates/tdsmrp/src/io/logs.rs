//! Training logs: one JSON record per line per epoch.

use std::io::Write;
use std::path::Path;

use super::IoError;
use crate::train::EpochLogRecord;

pub fn write_train_log(path: &Path, records: &[EpochLogRecord]) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| IoError::Invalid(format!("log serialization: {e}")))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_train_log(path: &Path) -> Result<Vec<EpochLogRecord>, IoError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| IoError::Invalid(format!("{}: {e}", path.display())))
        })
        .collect()
}
