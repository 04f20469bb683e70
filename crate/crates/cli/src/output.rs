//! Run manifests and atomic artifact writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Everything needed to reproduce a run. Wall time is reported on stderr
/// only so that equal manifests give byte-identical artifacts.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

impl Manifest {
    pub fn new(command: &str, params: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        Manifest { command: command.to_string(), params, inputs: BTreeMap::new(), seed }
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "params": self.params,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes via a temporary file in the target directory and renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

/// Serializes `body` with the manifest embedded under `"manifest"`.
pub fn with_manifest(m: &Manifest, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("manifest".into(), m.to_json());
    match body {
        Value::Object(o) => out.extend(o),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

pub fn write_json(path: &Path, m: &Manifest, body: Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(&with_manifest(m, body))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Writes to `--out` when given, otherwise to stdout.
pub fn emit_json(out: Option<&Path>, m: &Manifest, body: Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, m, body),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", serde_json::to_string_pretty(&with_manifest(m, body))?) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}
