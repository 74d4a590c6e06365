//! Run manifests: every file artifact the CLI writes is accompanied by a
//! `<artifact>.manifest.json` recording the subcommand, all resolved
//! configuration (defaults materialized), the seeds in play, and the
//! input/output paths: enough to reproduce the artifact exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    /// Named seed axes derived from `seed` (projection, init, train, …).
    pub derived_seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Fully resolved configuration, flat key → value.
    pub config: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        RunManifest {
            tool: "lshproj",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seed,
            derived_seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: BTreeMap::new(),
        }
    }

    pub fn derived_seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.derived_seeds.insert(name.to_string(), value);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    /// Copies every entry of an emitted key-value config block.
    pub fn set_kv(&mut self, kv: &lshproj::kvconfig::KvMap) -> &mut Self {
        for (k, v) in kv.iter() {
            self.set(k, v);
        }
        self
    }

    /// Writes `<artifact>.manifest.json` next to the artifact.
    pub fn write_alongside(&self, artifact: &Path) -> anyhow::Result<PathBuf> {
        let path = PathBuf::from(format!("{}.manifest.json", artifact.display()));
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        fs::write(&path, body)?;
        Ok(path)
    }
}
