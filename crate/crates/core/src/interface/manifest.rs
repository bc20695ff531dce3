use std::fs::{self, File, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::{AemError, Result};

const LOCK_NAME: &str = ".aem.lock";

/// Provenance of one command run. Each command writes its own manifest
/// (`<command>.manifest.json`) listing the artifacts it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Flags and configuration exactly as used.
    pub config: serde_json::Value,
    /// SHA-256 of the input the command consumed (corpus, documents or
    /// events file).
    pub input_sha256: String,
    pub seed: Option<u64>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn path(out_dir: &Path, command: &str) -> PathBuf {
        out_dir.join(format!("{command}.manifest.json"))
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = Self::path(out_dir, &self.command);
        let json = serde_json::to_string_pretty(self).map_err(|e| AemError::config(e.to_string()))?;
        fs::write(&path, json + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| AemError::config(format!("{}: {e}", path.display())))
    }
}

/// Exclusive claim on an output directory for the lifetime of the value.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
    _file: File,
}

impl OutputLock {
    /// Creates `out_dir` if needed and takes its lock file; fails if another
    /// run holds it.
    pub fn acquire(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        let path = out_dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(file) => Ok(OutputLock { path, _file: file }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(AemError::config(format!(
                "{} is locked by another run (remove {} if that run died)",
                out_dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = OutputLock::acquire(dir.path()).unwrap();
        assert!(OutputLock::acquire(dir.path()).is_err());
        drop(lock);
        assert!(OutputLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest {
            command: "prepare".into(),
            config: serde_json::json!({"min_df": 1}),
            input_sha256: "00".into(),
            seed: None,
            artifacts: vec!["vocab.tsv".into()],
            started_unix: 1.0,
            finished_unix: 2.0,
        };
        let path = m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::read(&path).unwrap(), m);
    }
}
