//! CSV tables and the run manifest, written atomically: every file goes to a
//! temporary sibling first and is renamed into place once complete.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// An in-memory CSV table.
pub struct Table {
    name: &'static str,
    writer: csv::Writer<Vec<u8>>,
    rows: usize,
}

impl Table {
    pub fn new(name: &'static str, header: &[String]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header)
            .map_err(|e| CliError::io(name, e))?;
        Ok(Self {
            name,
            writer,
            rows: 0,
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.rows += 1;
        self.writer
            .write_record(fields)
            .map_err(|e| CliError::io(self.name, e))
    }

    pub fn finish(self) -> Result<Artifact, CliError> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| CliError::io(self.name, e))?;
        Ok(Artifact {
            file: self.name.to_string(),
            rows: Some(self.rows),
            bytes,
        })
    }
}

/// A finished output file that has not been written yet.
pub struct Artifact {
    pub file: String,
    pub rows: Option<usize>,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    pub sha256: String,
}

impl Artifact {
    pub fn json(file: &str, value: &impl Serialize) -> Result<Self, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(file, e))?;
        bytes.push(b'\n');
        Ok(Self {
            file: file.to_string(),
            rows: None,
            bytes,
        })
    }

    pub fn entry(&self) -> ArtifactEntry {
        ArtifactEntry {
            file: self.file.clone(),
            rows: self.rows,
            sha256: sha256_hex(&self.bytes),
        }
    }
}

fn write_atomic(dir: &Path, file: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(file);
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder
        .tempfile_in(dir)
        .map_err(|e| CliError::io(dir.display(), e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(target.display(), e))?;
    tmp.persist(&target)
        .map_err(|e| CliError::io(target.display(), e.error))?;
    Ok(target)
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    artifacts
        .iter()
        .map(|a| write_atomic(dir, &a.file, &a.bytes))
        .collect()
}
