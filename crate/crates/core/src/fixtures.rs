//! Versioned key-value store of frozen ground-state constants.
//!
//! Each record line reads `dim=<N> name=<constant> value=<f64> quad=<hash>`;
//! blank lines and `#` comments are ignored, and one `version=<u32>` line is
//! required.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};

pub const FIXTURES_ENV: &str = "NLW_FIXTURES";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub dim: Dimension,
    pub name: String,
    pub value: f64,
    pub quad: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    pub version: u32,
    pub entries: Vec<FixtureEntry>,
}

impl Fixtures {
    pub fn bundled_path() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("ground_state.txt")
    }

    /// Path from `NLW_FIXTURES`, falling back to the copy shipped with the crate.
    pub fn default_path() -> PathBuf {
        std::env::var_os(FIXTURES_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(Self::bundled_path)
    }

    pub fn load_default() -> Result<Self> {
        Self::load(&Self::default_path())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| NlwError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            NlwError::Format(m) => NlwError::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| NlwError::Format(format!("line {}: {m}", lineno + 1));
            if let Some(v) = line.strip_prefix("version=") {
                version = Some(v.trim().parse::<u32>().map_err(|_| bad("bad version"))?);
                continue;
            }
            let (mut dim, mut name, mut value, mut quad) = (None, None, None, None);
            for tok in line.split_whitespace() {
                let (k, v) = tok.split_once('=').ok_or_else(|| bad("expected key=value"))?;
                match k {
                    "dim" => {
                        let n = v.parse::<u32>().map_err(|_| bad("bad dim"))?;
                        dim = Some(Dimension::new(n)?);
                    }
                    "name" => name = Some(v.to_string()),
                    "value" => value = Some(v.parse::<f64>().map_err(|_| bad("bad value"))?),
                    "quad" => quad = Some(v.to_string()),
                    _ => return Err(bad(&format!("unknown key `{k}`"))),
                }
            }
            entries.push(FixtureEntry {
                dim: dim.ok_or_else(|| bad("missing dim"))?,
                name: name.ok_or_else(|| bad("missing name"))?,
                value: value.ok_or_else(|| bad("missing value"))?,
                quad: quad.ok_or_else(|| bad("missing quad"))?,
            });
        }
        Ok(Fixtures {
            version: version.ok_or_else(|| NlwError::Format("missing version line".into()))?,
            entries,
        })
    }

    pub fn render(&self, header: &str) -> String {
        let mut s = String::new();
        for line in header.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "version={}", self.version);
        for e in &self.entries {
            let _ = writeln!(s, "dim={} name={} value={:.17e} quad={}", e.dim.n(), e.name, e.value, e.quad);
        }
        s
    }

    pub fn get(&self, dim: Dimension, name: &str) -> Result<f64> {
        self.entries
            .iter()
            .find(|e| e.dim == dim && e.name == name)
            .map(|e| e.value)
            .ok_or_else(|| NlwError::Format(format!("fixture `{name}` for {dim} not found")))
    }

    /// ||grad W||^2.
    pub fn grad_sq(&self, dim: Dimension) -> Result<f64> {
        self.get(dim, "grad_sq")
    }

    /// Compact description for run manifests.
    pub fn summary(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| format!("v{} {} {}={:.12e} quad={}", self.version, e.dim, e.name, e.value, e.quad))
            .collect()
    }
}
