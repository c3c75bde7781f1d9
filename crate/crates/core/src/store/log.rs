//! Append-only JSONL event log, one record per line, fsynced per append.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::review::{AsId, EditAction, EditEvent};

/// One line of the event-log file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub as_id: AsId,
    pub doc_id: String,
    pub annotator: String,
    #[serde(flatten)]
    pub action: EditAction,
    pub ts: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

impl LogRecord {
    pub fn event(&self) -> EditEvent {
        EditEvent {
            seq: self.seq,
            as_id: self.as_id,
            annotator: self.annotator.clone(),
            action: self.action.clone(),
            timestamp: self.ts,
        }
    }
}

#[derive(Debug, Default)]
pub struct EventLog {
    path: Option<PathBuf>,
    file: Option<File>,
    records: Vec<LogRecord>,
}

impl EventLog {
    pub fn in_memory() -> EventLog {
        EventLog::default()
    }

    /// Opens (or creates) a log file and reads every complete record.
    ///
    /// A trailing line without its newline is the remains of an interrupted
    /// append; it is cut off so that only whole events are ever visible.
    pub fn open(path: impl AsRef<Path>) -> Result<EventLog, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;

        let mut records = Vec::new();
        let mut complete_len: u64 = 0;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            if !line.ends_with('\n') {
                break;
            }
            line_no += 1;
            complete_len += n as u64;
            if line.trim().is_empty() {
                continue;
            }
            let record: LogRecord = serde_json::from_str(&line).map_err(|e| StoreError::CorruptLog {
                line: line_no,
                message: e.to_string(),
            })?;
            let expected = records.len() as u64 + 1;
            if record.seq != expected {
                return Err(StoreError::CorruptLog {
                    line: line_no,
                    message: format!("expected sequence {expected}, found {}", record.seq),
                });
            }
            records.push(record);
        }
        drop(reader);

        if file.metadata()?.len() > complete_len {
            file.set_len(complete_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok(EventLog {
            path: Some(path),
            file: Some(file),
            records,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn last_seq(&self) -> u64 {
        self.records.last().map_or(0, |r| r.seq)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes and syncs one record. The record is only added to memory once
    /// it is durable.
    pub fn append(&mut self, record: LogRecord) -> Result<u64, StoreError> {
        if record.seq != self.last_seq() + 1 {
            return Err(StoreError::CorruptLog {
                line: self.records.len() + 1,
                message: format!("append of sequence {} after {}", record.seq, self.last_seq()),
            });
        }
        if let Some(file) = self.file.as_mut() {
            let mut line = serde_json::to_vec(&record).expect("log record serializes");
            line.push(b'\n');
            file.write_all(&line)?;
            file.sync_data()?;
        }
        let seq = record.seq;
        self.records.push(record);
        Ok(seq)
    }
}
