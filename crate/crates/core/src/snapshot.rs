//! Plain-text posterior snapshots.
//!
//! ```text
//! tool.version=0.1.0
//! data.sha256=<hex digest of the departure file>
//! prior.gamma.a=1
//! prior.gamma.b=1
//! gamma.a=10
//! gamma.b=9.53
//! dp.alpha=1
//! dp.base=geom:0.5
//! dp.n_obs=9
//! dp.count.0=4
//! dp.count.2=4
//! ```
//!
//! Blank lines and lines starting with `#` are ignored on load. Numbers are
//! written in shortest round-trip form, so save, load and save again
//! reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::DeltaDirichletPosterior;
use crate::pgf::BasePmf;
use crate::rate::GammaPosterior;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub data_sha256: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSnapshot {
    pub prior_gamma: GammaPosterior,
    pub gamma: GammaPosterior,
    pub dp: DeltaDirichletPosterior,
    pub provenance: Provenance,
}

impl PosteriorSnapshot {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool.version={}", self.provenance.tool_version);
        let _ = writeln!(out, "data.sha256={}", self.provenance.data_sha256);
        let _ = writeln!(out, "prior.gamma.a={}", self.prior_gamma.a);
        let _ = writeln!(out, "prior.gamma.b={}", self.prior_gamma.b);
        let _ = writeln!(out, "gamma.a={}", self.gamma.a);
        let _ = writeln!(out, "gamma.b={}", self.gamma.b);
        let _ = writeln!(out, "dp.alpha={}", self.dp.alpha());
        let _ = writeln!(out, "dp.base={}", self.dp.base());
        let _ = writeln!(out, "dp.n_obs={}", self.dp.n_obs());
        for (k, c) in self.dp.counts() {
            let _ = writeln!(out, "dp.count.{k}={c}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key=value, found {line:?}"),
            })?;
            if let Some(k) = key.strip_prefix("dp.count.") {
                let k: u64 =
                    k.parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad count key {key:?}") })?;
                let c: u64 = value
                    .parse()
                    .map_err(|_| Error::Parse { line: line_no, message: format!("bad count {value:?}") })?;
                if counts.insert(k, c).is_some() {
                    return Err(Error::Parse { line: line_no, message: format!("duplicate key {key:?}") });
                }
                continue;
            }
            const KEYS: [&str; 9] = [
                "tool.version",
                "data.sha256",
                "prior.gamma.a",
                "prior.gamma.b",
                "gamma.a",
                "gamma.b",
                "dp.alpha",
                "dp.base",
                "dp.n_obs",
            ];
            if !KEYS.contains(&key) {
                return Err(Error::Parse { line: line_no, message: format!("unknown key {key:?}") });
            }
            if fields.insert(key, (line_no, value)).is_some() {
                return Err(Error::Parse { line: line_no, message: format!("duplicate key {key:?}") });
            }
        }

        let get = |key: &str| -> Result<(usize, &str)> {
            fields.get(key).copied().ok_or_else(|| Error::Parse { line: 0, message: format!("missing key {key:?}") })
        };
        let num = |key: &str| -> Result<f64> {
            let (line, v) = get(key)?;
            v.parse().map_err(|_| Error::Parse { line, message: format!("bad number for {key}: {v:?}") })
        };
        let (base_line, base) = get("dp.base")?;
        let base: BasePmf =
            base.parse().map_err(|e: Error| Error::Parse { line: base_line, message: e.to_string() })?;
        let (n_line, n_obs) = get("dp.n_obs")?;
        let n_obs: u64 =
            n_obs.parse().map_err(|_| Error::Parse { line: n_line, message: format!("bad n_obs {n_obs:?}") })?;
        let corrupt = |e: Error| Error::CorruptData(e.to_string());

        Ok(Self {
            prior_gamma: GammaPosterior::new(num("prior.gamma.a")?, num("prior.gamma.b")?).map_err(corrupt)?,
            gamma: GammaPosterior::new(num("gamma.a")?, num("gamma.b")?).map_err(corrupt)?,
            dp: DeltaDirichletPosterior::from_parts(num("dp.alpha")?, base, counts, n_obs)?,
            provenance: Provenance {
                data_sha256: get("data.sha256")?.1.to_string(),
                tool_version: get("tool.version")?.1.to_string(),
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = std::fs::metadata(path).map(|m| m.permissions().mode()).unwrap_or(0o644);
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(mode))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
