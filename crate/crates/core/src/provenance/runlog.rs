use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assignment::Assignment;
use crate::error::{Error, Result};

pub fn summary_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub slot_id: String,
    pub summary_hash: String,
    /// Kept next to the hash so earlier versions of a summary can be
    /// recovered.
    pub summary_text: String,
    pub model_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_number: u64,
    pub timestamp: DateTime<Utc>,
    pub assignment_id: String,
    pub entries: Vec<RunEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub run_number: u64,
    pub timestamp: DateTime<Utc>,
    pub model_id: String,
    pub score: f64,
    pub summary_hash: String,
    pub summary_text: String,
}

/// Append-only log of scoring runs, one JSON record per line.
///
/// Opening an existing log replays it; a torn final line left by a crash
/// mid-append is cut off, anything else unparsable is reported as
/// corruption. Without a path the log lives in memory only.
#[derive(Debug)]
pub struct RunLog {
    path: Option<PathBuf>,
    file: Option<File>,
    records: Vec<RunRecord>,
}

impl RunLog {
    pub fn in_memory() -> Self {
        RunLog {
            path: None,
            file: None,
            records: Vec::new(),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let records = Self::replay(&mut file)?;
        Ok(RunLog {
            path: Some(path),
            file: Some(file),
            records,
        })
    }

    fn replay(file: &mut File) -> Result<Vec<RunRecord>> {
        file.seek(SeekFrom::Start(0))?;
        let mut reader = BufReader::new(&*file);
        let mut records: Vec<RunRecord> = Vec::new();
        let mut good_len: u64 = 0;
        let mut buf = String::new();
        let mut line_no = 0;
        loop {
            buf.clear();
            let read = reader.read_line(&mut buf)?;
            if read == 0 {
                break;
            }
            line_no += 1;
            let complete = buf.ends_with('\n');
            if buf.trim().is_empty() {
                if complete {
                    good_len += read as u64;
                }
                continue;
            }
            match serde_json::from_str::<RunRecord>(buf.trim_end()) {
                Ok(record) if complete => {
                    let expected = records.len() as u64 + 1;
                    if record.run_number != expected {
                        return Err(Error::CorruptLog {
                            line: line_no,
                            reason: format!("run number {} where {expected} was expected", record.run_number),
                        });
                    }
                    records.push(record);
                    good_len += read as u64;
                }
                // Torn tail: no newline, so the append never finished.
                _ if !complete => break,
                Ok(_) => unreachable!(),
                Err(e) => {
                    return Err(Error::CorruptLog {
                        line: line_no,
                        reason: e.to_string(),
                    })
                }
            }
        }
        drop(reader);
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
        }
        Ok(records)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn next_run_number(&self) -> u64 {
        self.records.len() as u64 + 1
    }

    /// Appends one run covering `scores` as `(slot_id, model_id, score)`.
    /// The record is on disk (flushed and synced) before this returns.
    pub fn record_run(&mut self, assignment: &Assignment, scores: &[(String, String, f64)]) -> Result<&RunRecord> {
        if scores.is_empty() {
            return Err(Error::EmptyInput("run entries"));
        }
        let entries = scores
            .iter()
            .map(|(slot_id, model_id, score)| {
                let slot = assignment
                    .slots
                    .iter()
                    .find(|s| &s.slot_id == slot_id)
                    .ok_or_else(|| Error::UnknownSlot(slot_id.clone()))?;
                Ok(RunEntry {
                    slot_id: slot_id.clone(),
                    summary_hash: summary_hash(&slot.text),
                    summary_text: slot.text.clone(),
                    model_id: model_id.clone(),
                    score: *score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let record = RunRecord {
            run_number: self.next_run_number(),
            timestamp: Utc::now(),
            assignment_id: assignment.id.clone(),
            entries,
        };
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
            file.sync_data()?;
        }
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Every score recorded for `slot_id`, oldest first.
    pub fn history(&self, slot_id: &str) -> Vec<HistoryRow> {
        self.records
            .iter()
            .flat_map(|r| {
                r.entries.iter().filter(|e| e.slot_id == slot_id).map(|e| HistoryRow {
                    run_number: r.run_number,
                    timestamp: r.timestamp,
                    model_id: e.model_id.clone(),
                    score: e.score,
                    summary_hash: e.summary_hash.clone(),
                    summary_text: e.summary_text.clone(),
                })
            })
            .collect()
    }

    /// Latest score per model for this exact summary text in this slot.
    pub fn cached_scores(&self, slot_id: &str, text_hash: &str) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            for e in r.entries.iter().filter(|e| e.slot_id == slot_id && e.summary_hash == text_hash) {
                out.insert(e.model_id.clone(), e.score);
            }
        }
        out
    }
}
