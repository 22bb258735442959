//! Per-run provenance record: what was run, on which inputs, producing what.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    /// Effective configuration after CLI, file and default resolution.
    pub config: serde_json::Value,
    /// Path to sha256 of the content.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: Option<String>,
}

impl RunManifest {
    pub fn start(command: impl Into<String>, args: Vec<String>, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs.insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        self.outputs.insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    /// Stamp the finish time and write the manifest atomically.
    pub fn finish(mut self, path: &Path) -> io::Result<Self> {
        self.finished_at = Some(chrono::Utc::now().to_rfc3339());
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(&mut tmp, &self)?;
        tmp.write_all(b"\n")?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(self)
    }
}

/// sha256 of a file, or of every file under a directory (relative path and
/// contents, in sorted order).
pub fn hash_path(path: &Path) -> io::Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<_> = WalkDir::new(path)
            .sort_by_file_name()
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(io::Error::other)?;
        files.retain(|e| e.file_type().is_file());
        for e in files {
            let rel = e.path().strip_prefix(path).unwrap_or(e.path());
            h.update(rel.to_string_lossy().as_bytes());
            h.update([0u8]);
            h.update(fs::read(e.path())?);
            h.update([0u8]);
        }
    } else {
        h.update(fs::read(path)?);
    }
    Ok(hex::encode(h.finalize()))
}
