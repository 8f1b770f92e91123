//! Append-only JSONL run log: one header line, then one line per agent.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Decision, Offer, Role};
use crate::persona::PersonaCondition;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub run_id: String,
    pub config_hash: String,
    pub protocol_version: u32,
    pub model_name: String,
    pub backend: String,
    pub role: Role,
    pub condition: PersonaCondition,
    pub n_agents: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    ParseFailure,
    RangeFailure,
    TransportFailure,
}

/// What came out of one agent interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Parsed {
    Offer {
        offer: Offer,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        proposer_coins: Option<i64>,
    },
    Decision {
        decision: Decision,
    },
    Failure {
        kind: FailureKind,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    pub run_id: String,
    pub agent_index: usize,
    pub persona_id: String,
    pub condition: PersonaCondition,
    pub role: Role,
    pub offer_presented: Option<Offer>,
    pub prompt_hash: String,
    /// Last raw response received; absent when no response ever arrived.
    pub raw_response: Option<String>,
    pub parsed: Parsed,
    pub attempt_count: u32,
    pub warnings: Vec<String>,
    pub timestamp: String,
}

impl RunLogEntry {
    pub fn is_failure(&self) -> bool {
        matches!(self.parsed, Parsed::Failure { .. })
    }

    /// Copy with the timestamp blanked, for determinism comparisons.
    pub fn without_timestamp(&self) -> RunLogEntry {
        RunLogEntry {
            timestamp: String::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogLine {
    Header(RunHeader),
    Entry(RunLogEntry),
}

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// A run log loaded into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub entries: Vec<RunLogEntry>,
}

impl RunLog {
    pub fn completed_indices(&self) -> BTreeSet<usize> {
        self.entries.iter().map(|e| e.agent_index).collect()
    }

    pub fn failure_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_failure()).count()
    }

    pub fn offers(&self) -> Vec<Offer> {
        self.entries
            .iter()
            .filter_map(|e| match e.parsed {
                Parsed::Offer { offer, .. } => Some(offer),
                _ => None,
            })
            .collect()
    }

    /// (offer presented, decision) for every parsed responder entry.
    pub fn responder_observations(&self) -> Vec<(Offer, Decision)> {
        self.entries
            .iter()
            .filter_map(|e| match (&e.parsed, e.offer_presented) {
                (Parsed::Decision { decision }, Some(offer)) => Some((offer, *decision)),
                _ => None,
            })
            .collect()
    }

    /// Entries sorted by agent index with timestamps blanked.
    pub fn content(&self) -> Vec<RunLogEntry> {
        let mut v: Vec<_> = self.entries.iter().map(RunLogEntry::without_timestamp).collect();
        v.sort_by_key(|e| e.agent_index);
        v
    }

    /// Read a log. A final line without its newline (an interrupted write)
    /// is ignored; any other malformed line is an error.
    pub fn read(path: impl AsRef<Path>) -> Result<RunLog, RunLogError> {
        let path = path.as_ref();
        let io_err = |source| RunLogError::Io {
            path: path.to_path_buf(),
            source,
        };
        let malformed = |line: usize, message: String| RunLogError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };

        let text = std::fs::read_to_string(path).map_err(io_err)?;
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        let mut header = None;
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in complete.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(line).map_err(|e| malformed(line_no, e.to_string()))?;
            match (parsed, &header) {
                (LogLine::Header(h), None) if line_no == 1 => header = Some(h),
                (LogLine::Header(_), _) => return Err(malformed(line_no, "unexpected header line".into())),
                (LogLine::Entry(_), None) => return Err(malformed(line_no, "entry before header".into())),
                (LogLine::Entry(e), Some(_)) => {
                    if !seen.insert(e.agent_index) {
                        return Err(malformed(line_no, format!("duplicate agent_index {}", e.agent_index)));
                    }
                    entries.push(e);
                }
            }
        }
        let header = header.ok_or_else(|| malformed(1, "missing header line".into()))?;
        Ok(RunLog { header, entries })
    }
}

/// Single writer appending lines to a log file.
pub struct RunLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl RunLogWriter {
    /// Start a new log, truncating any existing file.
    pub fn create(path: impl AsRef<Path>, header: &RunHeader) -> Result<Self, RunLogError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|source| RunLogError::Io {
            path: path.clone(),
            source,
        })?;
        let mut w = RunLogWriter {
            path,
            out: BufWriter::new(file),
        };
        w.write_line(&LogLine::Header(header.clone()))?;
        w.flush()?;
        Ok(w)
    }

    /// Open an existing log for appending. A dangling partial last line is
    /// cut off first so the next entry starts on a fresh line.
    pub fn append(path: impl AsRef<Path>) -> Result<Self, RunLogError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| RunLogError::Io {
            path: path.clone(),
            source,
        };
        let len = {
            let f = File::open(&path).map_err(io_err)?;
            let mut reader = BufReader::new(f);
            let mut kept = 0u64;
            let mut buf = Vec::new();
            loop {
                buf.clear();
                let n = reader.read_until(b'\n', &mut buf).map_err(io_err)?;
                if n == 0 || buf.last() != Some(&b'\n') {
                    break;
                }
                kept += n as u64;
            }
            kept
        };
        let file = OpenOptions::new().write(true).open(&path).map_err(io_err)?;
        file.set_len(len).map_err(io_err)?;
        drop(file);
        let file = OpenOptions::new().append(true).open(&path).map_err(io_err)?;
        Ok(RunLogWriter {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn write_entry(&mut self, entry: &RunLogEntry) -> Result<(), RunLogError> {
        self.write_line(&LogLine::Entry(entry.clone()))
    }

    fn write_line(&mut self, line: &LogLine) -> Result<(), RunLogError> {
        let mut text = serde_json::to_string(line).expect("log lines always serialize");
        text.push('\n');
        self.out.write_all(text.as_bytes()).map_err(|source| RunLogError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn flush(&mut self) -> Result<(), RunLogError> {
        self.out.flush().map_err(|source| RunLogError::Io {
            path: self.path.clone(),
            source,
        })
    }
}
