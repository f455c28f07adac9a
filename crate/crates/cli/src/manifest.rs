use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::job::Job;
use crate::output::{sha256_hex, write_file, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

/// Record of one run: the resolved job and checksums of what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub job: Job,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(job: &Job, files: &[(PathBuf, String)], wall_time_s: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: job.name().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s,
            job: job.clone(),
            outputs: files
                .iter()
                .map(|(p, c)| OutputRecord { path: p.clone(), sha256: sha256_hex(c.as_bytes()), bytes: c.len() })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| CliError::usage(format!("serializing manifest: {e}")))?;
        s.push('\n');
        write_file(path, &s)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: not a run manifest: {e}", path.display())))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!("unsupported manifest schema version {}", m.schema_version)));
        }
        Ok(m)
    }
}
