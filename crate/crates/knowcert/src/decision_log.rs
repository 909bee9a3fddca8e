//! Append-only decision log: one JSON record per line, fsync'd on append.
//!
//! Replaying the file from the start reproduces the curation state. A final
//! line without its newline is the residue of an interrupted append; it is
//! dropped on replay and cut off when the log is reopened for writing.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, Write};
use std::path::{Path, PathBuf};

use knowcert_core::{CurationDecision, LoggedDecision};
use serde::{Deserialize, Serialize};

pub const LOG_SCHEMA: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Record {
    schema: u32,
    #[serde(flatten)]
    entry: LoggedDecision,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("decision log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Replay {
    pub entries: Vec<LoggedDecision>,
    /// Byte length of the complete records.
    pub valid_len: u64,
    /// Whether an incomplete trailing record was skipped.
    pub torn_tail: bool,
}

/// Reads every complete record. Sequence numbers must count up from zero.
pub fn replay<R: Read>(input: R) -> Result<Replay, LogError> {
    let mut reader = BufReader::new(input);
    let mut out = Replay::default();
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line += 1;
        if buf.last() != Some(&b'\n') {
            out.torn_tail = true;
            break;
        }
        let corrupt = |message: String| LogError::Corrupt { line, message };
        let text = std::str::from_utf8(&buf).map_err(|e| corrupt(e.to_string()))?;
        if text.trim().is_empty() {
            out.valid_len += n as u64;
            continue;
        }
        let record: Record = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        if record.schema != LOG_SCHEMA {
            return Err(corrupt(format!("unsupported schema {}", record.schema)));
        }
        let expected = out.entries.len() as u64;
        if record.entry.seq != expected {
            return Err(corrupt(format!("sequence {} where {expected} was expected", record.entry.seq)));
        }
        out.entries.push(record.entry);
        out.valid_len += n as u64;
    }
    Ok(out)
}

pub fn encode(entry: &LoggedDecision) -> String {
    let record = Record {
        schema: LOG_SCHEMA,
        entry: entry.clone(),
    };
    let mut line = serde_json::to_string(&record).expect("decision records always serialize");
    line.push('\n');
    line
}

/// The single writer of a log file.
#[derive(Debug)]
pub struct DecisionLog {
    path: PathBuf,
    file: File,
    entries: Vec<LoggedDecision>,
}

impl DecisionLog {
    /// Opens or creates the log, replaying what is already there.
    pub fn open(path: &Path) -> Result<Self, LogError> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let replayed = replay(&mut file)?;
        if replayed.torn_tail {
            file.set_len(replayed.valid_len)?;
            file.sync_all()?;
        }
        file.seek(io::SeekFrom::End(0))?;
        Ok(DecisionLog {
            path: path.to_path_buf(),
            file,
            entries: replayed.entries,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[LoggedDecision] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends one decision and waits for it to reach the disk.
    pub fn append(&mut self, decision: CurationDecision) -> Result<LoggedDecision, LogError> {
        let entry = LoggedDecision::new(self.entries.len() as u64, decision);
        self.file.write_all(encode(&entry).as_bytes())?;
        self.file.sync_data()?;
        self.entries.push(entry.clone());
        Ok(entry)
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LoggedDecision>, LogError> {
    match File::open(path) {
        Ok(f) => Ok(replay(f)?.entries),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}
