use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    code_version: &'a str,
    config_sha256: String,
    config: &'a serde_json::Value,
    files: Vec<String>,
}

/// Output directory of one command invocation.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> anyhow::Result<PathBuf> {
        let mut body = String::new();
        for row in rows {
            body.push_str(&serde_json::to_string(row)?);
            body.push('\n');
        }
        self.write(name, body)
    }

    /// Writes `manifest.json` listing every other file under the directory.
    /// The config hash is over the compact JSON of `config`.
    pub fn finish(&self, command: &str, config: &serde_json::Value) -> anyhow::Result<PathBuf> {
        let digest = Sha256::digest(serde_json::to_vec(config)?);
        let mut files = Vec::new();
        list_files(&self.root, &self.root, &mut files)?;
        files.retain(|f| f != MANIFEST);
        let manifest = Manifest {
            schema_version: 1,
            command,
            code_version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex::encode(digest),
            config,
            files,
        };
        self.write(MANIFEST, serde_json::to_string_pretty(&manifest)? + "\n")
    }
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> anyhow::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            list_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).unwrap_or(&path);
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}
