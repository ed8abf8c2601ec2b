use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, OutputFormat};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: std::collections::BTreeMap<String, String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<FileDigest>,
}

/// Collects the files written by one command.
pub struct OutputSink {
    dir: PathBuf,
    csv: bool,
    json: bool,
    files: Vec<FileDigest>,
}

impl OutputSink {
    pub fn create(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv: cfg.wants(OutputFormat::Csv),
            json: cfg.wants(OutputFormat::Json),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Write a CSV produced by `fill` (skipped when CSV output is off).
    pub fn csv<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        if !self.csv {
            return Ok(());
        }
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.json {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn files(&self) -> &[FileDigest] {
        &self.files
    }

    /// Write `manifest.json` listing every file written so far.
    pub fn finish(self, command: &str, cfg: &ExperimentConfig, started_unix: u64) -> Result<RunManifest> {
        let mut versions = std::collections::BTreeMap::new();
        versions.insert("sqsim".to_string(), env!("CARGO_PKG_VERSION").to_string());
        let manifest = RunManifest {
            command: command.to_string(),
            config_sha256: sha256_hex(cfg.to_toml()?.as_bytes()),
            seed: cfg.seed,
            versions,
            started_unix,
            finished_unix: unix_now(),
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}

pub fn start_clock() -> u64 {
    unix_now()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatched: Vec<String>,
    pub missing: Vec<String>,
    /// Set when a re-run was compared and its config hash differed.
    pub config_changed: bool,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty() && !self.config_changed
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    Ok(serde_json::from_str(&text)?)
}

/// Recompute the digests listed in `dir/manifest.json`.
pub fn verify_manifest(dir: &Path) -> Result<VerifyReport> {
    let manifest = read_manifest(dir)?;
    let mut report = VerifyReport {
        checked: 0,
        mismatched: Vec::new(),
        missing: Vec::new(),
        config_changed: false,
    };
    for f in &manifest.files {
        match fs::read(dir.join(&f.path)) {
            Ok(bytes) => {
                report.checked += 1;
                if sha256_hex(&bytes) != f.sha256 {
                    report.mismatched.push(f.path.clone());
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => report.missing.push(f.path.clone()),
            Err(e) => return Err(Error::Io(e)),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let mut sink = OutputSink::create(dir.path(), &cfg).unwrap();
        sink.csv("a.csv", |b| {
            b.extend_from_slice(b"x\n1\n");
            Ok(())
        })
        .unwrap();
        sink.json("b.json", &vec![1, 2]).unwrap();
        let m = sink.finish("test", &cfg, 0).unwrap();
        assert_eq!(m.files.len(), 2);
        assert_eq!(m.files[0].sha256, sha256_hex(b"x\n1\n"));
        assert!(verify_manifest(dir.path()).unwrap().ok());
        fs::write(dir.path().join("a.csv"), "tampered").unwrap();
        fs::remove_file(dir.path().join("b.json")).unwrap();
        let r = verify_manifest(dir.path()).unwrap();
        assert_eq!(r.mismatched, vec!["a.csv".to_string()]);
        assert_eq!(r.missing, vec!["b.json".to_string()]);
    }
}
