//! Line-delimited JSON run logs.
//!
//! Every line is `{"schema_version":N,"payload":{...},"meta":{...}}`. The
//! determinism hash covers `schema_version` and `payload` only, so wall-clock
//! metadata never affects reproducibility checks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::orchestrator::Trajectory;
use crate::trainer::{EvalReport, IterationRecord};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// One logged trajectory with its training context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLogRecord {
    pub iteration: usize,
    pub group: usize,
    pub index: usize,
    pub policy_version: u64,
    pub advantage: f64,
    /// Carries the reward breakdown.
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogPayload {
    RunStart { config: Box<RunConfig> },
    Iteration(IterationRecord),
    Trajectory(Box<TrajectoryLogRecord>),
    /// `file` is relative to the checkpoint directory.
    Checkpoint { iteration: usize, file: String, policy_version: u64 },
    Eval { label: String, report: Box<EvalReport> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub unix_ms: u64,
}

impl LogMeta {
    pub fn now() -> Self {
        let unix_ms = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        LogMeta { unix_ms }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub schema_version: u32,
    pub payload: LogPayload,
    pub meta: LogMeta,
}

#[derive(Serialize)]
struct Hashed<'a> {
    schema_version: u32,
    payload: &'a LogPayload,
}

impl LogLine {
    pub fn new(payload: LogPayload) -> Self {
        LogLine {
            schema_version: LOG_SCHEMA_VERSION,
            payload,
            meta: LogMeta::now(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Data(format!("cannot serialize log line: {e}")))
    }

    /// Bytes fed to the determinism hash.
    pub fn hashed_bytes(&self) -> Result<Vec<u8>> {
        serde_json::to_vec(&Hashed {
            schema_version: self.schema_version,
            payload: &self.payload,
        })
        .map_err(|e| Error::Data(format!("cannot serialize log line: {e}")))
    }

    pub fn parse(line: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let v: Version = serde_json::from_str(line)
            .map_err(|e| Error::Data(format!("malformed log line: {e}")))?;
        if v.schema_version != LOG_SCHEMA_VERSION {
            return Err(Error::Schema {
                expected: LOG_SCHEMA_VERSION,
                found: v.schema_version,
                detail: "log line".into(),
            });
        }
        serde_json::from_str(line).map_err(|e| Error::Data(format!("malformed log line: {e}")))
    }
}

/// Single-writer append-only log with a running determinism hash.
pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
    hasher: Sha256,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(LogWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            hasher: Sha256::new(),
        })
    }

    pub fn write(&mut self, payload: LogPayload) -> Result<()> {
        let line = LogLine::new(payload);
        let mut hashed = line.hashed_bytes()?;
        hashed.push(b'\n');
        self.hasher.update(&hashed);
        writeln!(self.out, "{}", line.to_json()?).map_err(|e| Error::io(&self.path, e))
    }

    /// Flushes and returns the hex determinism hash.
    pub fn finish(mut self) -> Result<String> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(hex::encode(self.hasher.finalize()))
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogLine>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|(i, l)| {
            let l = l.map_err(|e| Error::io(path, e))?;
            LogLine::parse(&l).map_err(|e| match e {
                Error::Data(m) => Error::Data(format!("{}:{}: {m}", path.display(), i + 1)),
                other => other,
            })
        })
        .collect()
}

/// Determinism hash recomputed from a log file.
pub fn determinism_hash(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    for line in read_log(path)? {
        let mut bytes = line.hashed_bytes()?;
        bytes.push(b'\n');
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}
