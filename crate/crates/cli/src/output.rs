// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Compact JSON of a configuration and the SHA-256 hex digest of that text.
pub fn stamp<C: Serialize>(config: &C) -> (String, String) {
    let json = serde_json::to_string(config).expect("config serializes");
    let hash = hex::encode(Sha256::digest(json.as_bytes()));
    (json, hash)
}

/// Writes artifacts under one directory, stamping each with the config.
pub struct ArtifactWriter {
    config_json: String,
    config_value: Value,
    config_hash: String,
    dir: PathBuf,
}

impl ArtifactWriter {
    pub fn new<C: Serialize>(config: &C, dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let (config_json, config_hash) = stamp(config);
        let config_value = serde_json::from_str(&config_json).expect("stamped config is JSON");
        Ok(Self { config_json, config_value, config_hash, dir: dir.to_path_buf() })
    }

    fn header(&self) -> String {
        format!("# config_hash={} config={}\n", self.config_hash, self.config_json)
    }

    /// `body` is the CSV text including its column header line.
    pub fn csv(&mut self, name: &str, body: &str) -> CliResult<()> {
        let mut text = self.header();
        text.push_str(body);
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Envelope<'b, T> {
            config_hash: String,
            config: &'b Value,
            result: &'b T,
        }
        let env = Envelope { config_hash: self.config_hash.clone(), config: &self.config_value, result };
        let mut text = serde_json::to_string_pretty(&env)
            .map_err(|e| CliError::Validation(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        log::debug!("wrote {}", path.display());
        Ok(())
    }
}
