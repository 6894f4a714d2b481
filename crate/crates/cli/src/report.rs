//! The structured run report every invocation writes next to its
//! artifacts: inputs, counts, stage timings, and output hashes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub argv: Vec<String>,
    pub threads: usize,
    pub inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ingest_counts: Option<kdist_core::corpus::IngestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_counts: Option<kdist_core::corpus::FilterReport>,
    pub timings_ms: BTreeMap<String, u64>,
    pub outputs: Vec<OutputEntry>,
}

impl RunReport {
    pub fn new(command: &str, threads: usize) -> RunReport {
        RunReport {
            command: command.to_string(),
            argv: std::env::args().collect(),
            threads,
            inputs: BTreeMap::new(),
            ingest_counts: None,
            filter_counts: None,
            timings_ms: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.insert(key.to_string(), value.to_string());
    }

    /// Times one pipeline stage.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let started = Instant::now();
        let out = f();
        self.timings_ms
            .insert(name.to_string(), started.elapsed().as_millis() as u64);
        out
    }

    /// Writes an artifact, records its hash, and prints its path.
    pub fn write_artifact(&mut self, path: &Path, contents: &[u8]) -> Result<()> {
        std::fs::write(path, contents)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(OutputEntry {
            path: path.display().to_string(),
            bytes: contents.len() as u64,
            sha256: hex(&Sha256::digest(contents)),
        });
        println!("wrote {}", path.display());
        Ok(())
    }

    /// Records an artifact some other code already wrote.
    pub fn note_artifact(&mut self, path: &Path) -> Result<()> {
        let contents = std::fs::read(path)
            .with_context(|| format!("cannot read back artifact {}", path.display()))?;
        self.outputs.push(OutputEntry {
            path: path.display().to_string(),
            bytes: contents.len() as u64,
            sha256: hex(&Sha256::digest(&contents)),
        });
        println!("wrote {}", path.display());
        Ok(())
    }

    pub fn finish(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("run_report.json");
        let mut file = std::fs::File::create(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(path)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
