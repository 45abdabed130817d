// SPDX-License-Identifier: Apache-2.0

//! Output files and their run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{ConfigFile, ConfigSource};
use crate::error::{CliError, Result};

/// Reproducibility record written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub arguments: &'a [String],
    pub source: &'a ConfigSource,
    pub config: &'a ConfigFile,
    pub seed: Option<u64>,
    pub output: String,
    /// The only time-dependent field anywhere in the outputs.
    pub created_unix_s: u64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Shared context for emitting files from one invocation.
pub struct Emitter<'a> {
    pub subcommand: &'a str,
    pub arguments: &'a [String],
    pub source: &'a ConfigSource,
    pub config: &'a ConfigFile,
    pub seed: Option<u64>,
}

impl Emitter<'_> {
    /// Writes `bytes` to `path` and its manifest beside it.
    pub fn write_file(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            arguments: self.arguments,
            source: self.source,
            config: self.config,
            seed: self.seed,
            output: path.display().to_string(),
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mpath = manifest_path(path);
        std::fs::write(&mpath, to_json(&manifest)).map_err(|e| CliError::io(&mpath, e))
    }

    /// Writes to `path` when given, stdout otherwise. Returns whether a
    /// file was written.
    pub fn emit(&self, path: Option<&Path>, bytes: &[u8]) -> Result<bool> {
        match path {
            Some(p) => self.write_file(p, bytes).map(|_| true),
            None => {
                let mut out = std::io::stdout().lock();
                match out.write_all(bytes).and_then(|_| out.flush()) {
                    // A closed reader (e.g. `| head`) is not a failure.
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(CliError::io("<stdout>", e))
                    }
                    _ => Ok(false),
                }
            }
        }
    }
}

/// Pretty JSON with a trailing newline; floats keep full precision.
pub fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable output");
    s.push(b'\n');
    s
}

/// RFC 4180 CSV from a header and string records.
pub fn to_csv<I, R>(header: &[&str], records: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))
}
