use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use sha2::{Digest, Sha256};

use difflim::{output, Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Collects written files so the manifest can list them.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn write(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::Io {
            context: format!("writing {}", path.display()),
            source: e,
        })?;
        self.files
            .push((name.to_string(), sha256_hex(text.as_bytes())));
        Ok(())
    }

    pub fn write_json(&mut self, dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Argument(e.to_string()))?;
        text.push('\n');
        self.write(dir, name, &text)
    }

    /// Write `manifest.json` listing every artifact so far.
    pub fn finish(self, dir: &Path, config_text: &str, argv: &[String]) -> Result<()> {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let files: Vec<_> = self
            .files
            .iter()
            .map(|(name, hash)| json!({ "name": name, "sha256": hash }))
            .collect();
        let manifest = json!({
            "config_sha256": sha256_hex(config_text.as_bytes()),
            "command": argv.join(" "),
            "versions": {
                "difflim": env!("CARGO_PKG_VERSION"),
            },
            "created_unix": created,
            "files": files,
        });
        output::write_json(&dir.join("manifest.json"), &manifest)
    }
}
