use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RUBRIC_MIN: f64 = 1.0;
pub const RUBRIC_MAX: f64 = 4.0;

/// An expert-scored source/summary pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingExample {
    pub example_id: String,
    pub source: String,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rubric: Option<[f64; 6]>,
    pub content: f64,
    pub wording: f64,
}

impl TrainingExample {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.example_id.is_empty() {
            return Err("example_id is empty".into());
        }
        if !self.content.is_finite() || !self.wording.is_finite() {
            return Err("content and wording must be finite".into());
        }
        if let Some(rubric) = &self.rubric {
            for (i, v) in rubric.iter().enumerate() {
                if !(RUBRIC_MIN..=RUBRIC_MAX).contains(v) {
                    return Err(format!("rubric[{i}] = {v} outside [1, 4]"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<RejectedLine>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingCorpus {
    examples: Vec<TrainingExample>,
    index: HashMap<String, usize>,
}

impl TrainingCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest_path(&mut self, path: impl AsRef<Path>) -> Result<IngestReport> {
        let text = std::fs::read_to_string(path)?;
        Ok(self.ingest_str(&text))
    }

    /// Adds every valid line; bad lines are reported by 1-based line number
    /// and skipped. Blank lines are ignored.
    pub fn ingest_str(&mut self, text: &str) -> IngestReport {
        let mut report = IngestReport::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i + 1;
            let parsed = serde_json::from_str::<TrainingExample>(line)
                .map_err(|e| e.to_string())
                .and_then(|ex| ex.validate().map(|_| ex));
            match parsed {
                Ok(ex) if self.index.contains_key(&ex.example_id) => report.rejected.push(RejectedLine {
                    line: line_no,
                    reason: format!("duplicate example_id `{}`", ex.example_id),
                }),
                Ok(ex) => {
                    self.index.insert(ex.example_id.clone(), self.examples.len());
                    self.examples.push(ex);
                    report.accepted += 1;
                }
                Err(reason) => report.rejected.push(RejectedLine { line: line_no, reason }),
            }
        }
        report
    }

    pub fn get(&self, example_id: &str) -> Result<&TrainingExample> {
        self.index
            .get(example_id)
            .map(|&i| &self.examples[i])
            .ok_or_else(|| Error::UnknownExample(example_id.to_string()))
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Rubric rows of the examples that carry one, in ingest order.
    pub fn rubric_matrix(&self) -> Vec<[f64; 6]> {
        self.examples.iter().filter_map(|e| e.rubric).collect()
    }
}
