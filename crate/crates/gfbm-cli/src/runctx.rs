//! Output directory handling and the run manifest.
//!
//! Every file a run writes is registered here with its SHA-256 digest; the
//! manifest echoes the effective config so re-running it reproduces the data
//! files byte for byte.

use crate::args::EffectiveConfig;
use anyhow::{Context, Result};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct RunContext {
    pub config: EffectiveConfig,
    out_dir: Option<PathBuf>,
    files: Vec<(String, String)>,
    started: Instant,
    seeds_used: Vec<u64>,
}

impl RunContext {
    pub fn new(config: EffectiveConfig) -> Result<Self> {
        let out_dir = match &config.out {
            Some(dir) => {
                let p = PathBuf::from(dir);
                std::fs::create_dir_all(&p)
                    .with_context(|| format!("creating output directory {}", p.display()))?;
                Some(p)
            }
            None => None,
        };
        Ok(RunContext {
            config,
            out_dir,
            files: Vec::new(),
            started: Instant::now(),
            seeds_used: Vec::new(),
        })
    }

    pub fn has_out(&self) -> bool {
        self.out_dir.is_some()
    }

    pub fn note_seed(&mut self, seed: u64) {
        if !self.seeds_used.contains(&seed) {
            self.seeds_used.push(seed);
        }
    }

    /// Write a data file into the run directory and register its digest.
    pub fn write_file(&mut self, name: &str, contents: &str) -> Result<()> {
        let dir = self
            .out_dir
            .as_ref()
            .context("no output directory for this run (pass --out)")?;
        let path = dir.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(contents.as_bytes()));
        self.files.push((name.to_string(), digest));
        Ok(())
    }

    pub fn config_digest(&self) -> String {
        hex::encode(Sha256::digest(self.config.canonical_json().as_bytes()))
    }

    /// Write manifest.json last; no-op for print-only runs.
    pub fn finish(&self) -> Result<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        let manifest = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config": serde_json::from_str::<serde_json::Value>(&self.config.canonical_json())?,
            "config_digest": self.config_digest(),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "seeds": self.seeds_used,
            "files": self.files.iter().map(|(name, sha256)| {
                serde_json::json!({"name": name, "sha256": sha256})
            }).collect::<Vec<_>>(),
        });
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// 17-significant-digit float formatting: exact round-trip for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn read_config_file(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
