//! Manifests and the order-preserving worker pool.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// What produced a directory: the command line, the effective config and
/// seed, and a hash of every output file. Enough to rerun the command and
/// check the result.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub files: Vec<FileEntry>,
    pub details: Value,
}

#[derive(Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Manifest {
            seed: Some(config.seed),
            config: serde_json::to_value(config).expect("configs serialize"),
            ..Self::bare(command)
        }
    }

    /// For commands that take no experiment config.
    pub fn bare(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            argv: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            config: Value::Null,
            files: Vec::new(),
            details: json!({}),
        }
    }

    pub fn details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    /// Hash `files` and write `manifest.json` next to them in `dir`.
    pub fn write(mut self, dir: &Path, files: &[PathBuf]) -> Result<PathBuf> {
        for f in files {
            self.files.push(FileEntry {
                name: f
                    .strip_prefix(dir)
                    .unwrap_or(f)
                    .display()
                    .to_string(),
                sha256: sha256_file(f)?,
            });
        }
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}

/// Map `f` over `items` on up to `jobs` threads; results keep input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}
