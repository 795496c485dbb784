use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;
use tempfile::TempDir;
use xxhash_rust::xxh3::Xxh3;

/// Collects a run's outputs in a hidden directory next to the destination and
/// moves them into place only on [`Staging::commit`]. Dropping it without a
/// commit removes everything written so far.
pub struct Staging {
    dir: TempDir,
    out: PathBuf,
    written: Vec<String>,
}

impl Staging {
    pub fn new(out: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let dir = tempfile::Builder::new().prefix(".curate-staging-").tempdir_in(out)?;
        Ok(Self { dir, out: out.to_path_buf(), written: Vec::new() })
    }

    /// Path inside the staging area for `rel`, creating parent directories.
    pub fn path(&mut self, rel: &str) -> anyhow::Result<PathBuf> {
        let p = self.dir.path().join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_string());
        }
        Ok(p)
    }

    pub fn create(&mut self, rel: &str) -> anyhow::Result<BufWriter<File>> {
        let p = self.path(rel)?;
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {rel}"))?))
    }

    pub fn create_gz(&mut self, rel: &str) -> anyhow::Result<GzEncoder<BufWriter<File>>> {
        Ok(GzEncoder::new(self.create(rel)?, Compression::default()))
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> anyhow::Result<()> {
        let mut w = self.create(rel)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let mut w = self.create(rel)?;
        w.write_all(bytes)?;
        w.flush()?;
        Ok(())
    }

    pub fn outputs(&self) -> Vec<String> {
        let mut v = self.written.clone();
        v.sort();
        v
    }

    /// Moves every staged file into the output directory, replacing older ones.
    pub fn commit(self) -> anyhow::Result<Vec<String>> {
        let outputs = self.outputs();
        for rel in &outputs {
            let dest = self.out.join(rel);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::rename(self.dir.path().join(rel), &dest).with_context(|| format!("moving {rel} into place"))?;
        }
        Ok(outputs)
    }
}

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub bytes: u64,
    pub xxh3: String,
}

pub fn describe_input(path: &Path) -> anyhow::Result<InputRecord> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Xxh3::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        h.update(&buf[..n]);
    }
    Ok(InputRecord { path: path.to_string_lossy().into_owned(), bytes, xxh3: format!("{:032x}", h.digest128()) })
}

/// Written as `manifest.json` next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize, K: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub inputs: Vec<InputRecord>,
    pub config: &'a C,
    pub config_hash: String,
    pub counters: K,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
