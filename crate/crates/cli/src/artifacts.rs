use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
struct Entry {
    path: String,
    sha256: String,
}

/// Output directory that records every file written so a manifest can tie
/// them to the producing spec.
pub struct ArtifactDir {
    root: PathBuf,
    entries: Vec<Entry>,
}

impl ArtifactDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_owned(), entries: Vec::new() })
    }

    pub fn write(&mut self, relative: &str, contents: &[u8]) -> CliResult<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.entries.push(Entry { path: relative.to_owned(), sha256: hex::encode(Sha256::digest(contents)) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(relative, text.as_bytes())
    }

    /// Writes `manifest_<command>.json`, listing artifacts by path.
    pub fn finish(mut self, command: &str, spec_hash: &str) -> CliResult<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            spec_hash: &'a str,
            artifacts: &'a [Entry],
        }
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let entries = std::mem::take(&mut self.entries);
        self.write_json(&format!("manifest_{command}.json"), &Manifest { command, spec_hash, artifacts: &entries })
    }
}
