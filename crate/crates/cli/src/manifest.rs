//! `manifest.cfg`: the resolved configuration of a run plus provenance.
//!
//! The file is valid config input; passing it back with `--config`
//! reproduces the run.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Resolver;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.cfg";

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub started: String,
    pub finished: Option<String>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub config: Vec<(String, String)>,
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(resolver: &Resolver, seeds: Vec<u64>, artifacts: &[&str]) -> Self {
        RunManifest {
            subcommand: resolver.section().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: now_rfc3339(),
            finished: None,
            seeds,
            artifacts: artifacts.iter().map(|s| s.to_string()).collect(),
            config: resolver.resolved().to_vec(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# eafo run manifest; replay with `--config` on this file\n[manifest]\n");
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "started = {}", self.started);
        let _ = writeln!(s, "finished = {}", self.finished.as_deref().unwrap_or(""));
        let _ = writeln!(s, "seeds = {}", seeds.join(","));
        let _ = writeln!(s, "artifacts = {}", self.artifacts.join(","));
        let _ = writeln!(s, "\n[{}]", self.subcommand);
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.render()).map_err(|e| CliError::io(&path, e))
    }

    /// Stamps the end time and rewrites the file.
    pub fn finish(&mut self, dir: &Path) -> Result<()> {
        self.finished = Some(now_rfc3339());
        self.write(dir)
    }
}
