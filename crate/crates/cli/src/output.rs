//! Output directory handling: every file starts with a header carrying the
//! seed and the config hash, and a manifest lists what was written.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct OutputDir {
    dir: PathBuf,
    command: String,
    seed: Option<u64>,
    config_hash: String,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, seed: Option<u64>, config_hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            seed,
            config_hash,
            files: Vec::new(),
        })
    }

    fn header(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# gep {} seed={} config_sha256={}\n",
            self.command, seed, self.config_hash
        )
    }

    fn header_value(&self) -> Value {
        json!({
            "command": self.command,
            "seed": self.seed,
            "config_sha256": self.config_hash,
        })
    }

    fn write(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes CSV produced by `fill`, preceded by the header comment line.
    pub fn csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> gep_core::Result<()>) -> Result<()> {
        let mut body = self.header().into_bytes();
        fill(&mut body)?;
        self.write(name, &body)
    }

    /// Writes `{"header": .., "<key>": value}` as pretty JSON.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, value: &T) -> Result<()> {
        let doc = json!({ "header": self.header_value(), key: value });
        let mut body = serde_json::to_vec_pretty(&doc)?;
        body.push(b'\n');
        self.write(name, &body)
    }

    /// Writes `manifest.json` listing every file and the extra `summary`.
    pub fn finish(mut self, summary: Value) -> Result<()> {
        let files = self.files.clone();
        let doc = json!({
            "header": self.header_value(),
            "files": files,
            "summary": summary,
        });
        let mut body = serde_json::to_vec_pretty(&doc)?;
        body.push(b'\n');
        self.write("manifest.json", &body)
    }
}
