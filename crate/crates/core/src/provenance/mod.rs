//! Run history, training corpus and score derivation.

mod pca;
mod runlog;
mod scatter;
mod training;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use pca::{derive_component_scores, ComponentScores, CONTENT_CRITERIA, CRITERIA};
pub use runlog::{summary_hash, HistoryRow, RunEntry, RunLog, RunRecord};
pub use scatter::{
    histogram, scatter_payload, Axis, Dimension, HistogramBin, RunArrow, RunPoint, ScatterPayload, TrainingPoint,
    HISTOGRAM_BINS,
};
pub use training::{IngestReport, RejectedLine, TrainingCorpus, TrainingExample};

use crate::assignment::{AnalysisOptions, Assignment};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadedExample {
    pub assignment: Assignment,
    /// Scores already recorded for this exact summary, keyed by model id.
    pub cached_scores: BTreeMap<String, f64>,
}

pub fn example_assignment_id(example_id: &str) -> String {
    format!("example-{example_id}")
}

pub fn load_example(corpus: &TrainingCorpus, log: &RunLog, example_id: &str) -> Result<LoadedExample> {
    let ex = corpus.get(example_id)?;
    let assignment = Assignment::new(
        example_assignment_id(example_id),
        ex.source.clone(),
        [(ex.summary.clone(), AnalysisOptions::default())],
    );
    let cached_scores = log.cached_scores(&assignment.slots[0].slot_id, &summary_hash(&ex.summary));
    Ok(LoadedExample {
        assignment,
        cached_scores,
    })
}
