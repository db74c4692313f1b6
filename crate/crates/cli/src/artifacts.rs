//! Artifact emission: CSV tables, JSON reports, and the reproduction
//! manifest. Everything written here is a pure function of the resolved
//! configuration, so a rerun reproduces identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(path)?;
        Ok(OutDir { root: path.to_path_buf() })
    }

    pub fn write_text(&self, name: &str, content: &str) -> std::io::Result<PathBuf> {
        let path = self.root.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(content.as_bytes())?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("report serialization");
        text.push('\n');
        self.write_text(name, &text)
    }
}

/// Shortest-roundtrip float formatting; empty cell for non-finite values.
pub fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// A CSV table accumulated row by row.
pub struct Csv {
    buf: String,
    cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf, cols: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.cols);
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Reproduction manifest: the resolved configuration, its hash, the
/// subcommand, and the engine version. No timestamps, no absolute paths, so
/// manifests from identical runs are byte-identical. A manifest is itself
/// accepted by `--config`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub engine_version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
}

pub fn config_sha256(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serialization");
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

pub fn write_manifest(
    out: &OutDir,
    subcommand: &str,
    cfg: &ExperimentConfig,
) -> std::io::Result<PathBuf> {
    let manifest = Manifest {
        subcommand: subcommand.to_string(),
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_sha256(cfg),
        config: cfg.clone(),
    };
    out.write_json("manifest.json", &manifest)
}
