//! Run manifests: what a command read, what it wrote, and the hashes that
//! make the run reproducible end to end.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArtifactRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// Hash over the resolved invocation (flags plus input hashes).
    pub config_hash: String,
    pub seed_set: Vec<u64>,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    pub wall_clock_seconds: f64,
}

pub fn hash_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: &str, seed_set: Vec<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: String::new(),
            seed_set,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), IoError> {
        self.inputs.push(ArtifactRef {
            path: path.display().to_string(),
            sha256: hash_file(path)?,
        });
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<(), IoError> {
        self.outputs.push(ArtifactRef {
            path: path.display().to_string(),
            sha256: hash_file(path)?,
        });
        Ok(())
    }

    /// Derives the config hash from the command line and the input hashes;
    /// call after all inputs are registered.
    pub fn seal(&mut self, resolved_flags: &str) {
        let mut hasher = Sha256::new();
        hasher.update(resolved_flags.as_bytes());
        for a in &self.inputs {
            hasher.update(a.sha256.as_bytes());
        }
        self.config_hash = hex::encode(hasher.finalize());
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| IoError::Invalid(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| IoError::Invalid(format!("{}: {e}", path.display())))
    }

    /// Checks that every referenced artifact exists and hash-matches.
    pub fn verify(&self) -> Result<(), IoError> {
        for a in self.inputs.iter().chain(&self.outputs) {
            let path = Path::new(&a.path);
            if !path.exists() {
                return Err(IoError::Verification {
                    path: a.path.clone(),
                    reason: "missing".into(),
                });
            }
            let got = hash_file(path)?;
            if got != a.sha256 {
                return Err(IoError::Verification {
                    path: a.path.clone(),
                    reason: format!("hash mismatch: {got} != {}", a.sha256),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_verify_catches_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("data.txt");
        std::fs::write(&artifact, "payload").unwrap();
        let mut m = RunManifest::new("simulate", vec![7]);
        m.add_output(&artifact).unwrap();
        m.seal("--episodes 10");
        let mpath = dir.path().join("manifest.json");
        m.write(&mpath).unwrap();

        let loaded = RunManifest::read(&mpath).unwrap();
        loaded.verify().unwrap();

        std::fs::write(&artifact, "tampered").unwrap();
        assert!(matches!(
            loaded.verify(),
            Err(IoError::Verification { .. })
        ));
    }

    #[test]
    fn config_hash_reflects_flags_and_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.cfg");
        std::fs::write(&input, "[cohort]").unwrap();
        let mut a = RunManifest::new("train", vec![0, 1]);
        a.add_input(&input).unwrap();
        a.seal("--mode td");
        let mut b = RunManifest::new("train", vec![0, 1]);
        b.add_input(&input).unwrap();
        b.seal("--mode sup28");
        assert_ne!(a.config_hash, b.config_hash);
    }
}
