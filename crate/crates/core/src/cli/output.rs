use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(format!("writing {}", path.display()), e));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one command run. Contains no timestamps, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub inputs: Vec<InputFile>,
    pub flags: BTreeMap<String, Value>,
    /// File name (relative to the output directory) -> sha256.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            inputs: Vec::new(),
            flags: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn flag(&mut self, name: &str, value: impl Into<Value>) {
        self.flags.insert(name.to_owned(), value.into());
    }

    pub fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        self.inputs.push(InputFile {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }
}

/// An output directory for one command run. Refuses up front to replace any
/// file the run may write unless `force` is set, and records the hash of
/// everything it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl OutputDir {
    pub fn prepare(root: &Path, force: bool, planned: &[&str], manifest: RunManifest) -> Result<Self> {
        if root.exists() && !root.is_dir() {
            return Err(Error::Argument(format!("{} exists and is not a directory", root.display())));
        }
        fs::create_dir_all(root).map_err(|e| Error::io(format!("creating {}", root.display()), e))?;
        if !force {
            let manifest_name = RunManifest::file_name(&manifest.command);
            let clash: Vec<&str> = planned
                .iter()
                .copied()
                .chain([manifest_name.as_str()])
                .filter(|f| root.join(f).exists())
                .collect();
            if !clash.is_empty() {
                return Err(Error::Argument(format!(
                    "refusing to overwrite {} in {} (pass --force)",
                    clash.join(", "),
                    root.display()
                )));
            }
        }
        Ok(OutputDir {
            root: root.to_owned(),
            manifest,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn manifest_mut(&mut self) -> &mut RunManifest {
        &mut self.manifest
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)?;
        self.manifest.outputs.insert(name.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes the manifest last and returns it.
    pub fn finish(self) -> Result<RunManifest> {
        let name = RunManifest::file_name(&self.manifest.command);
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.root.join(name), &bytes)?;
        Ok(self.manifest)
    }
}
