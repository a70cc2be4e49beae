//! Wire types for the scorelens HTTP API.

use serde::{Deserialize, Serialize};

use scorelens_core::attention::{Slice, SliceMode};
use scorelens_core::perturb::{Method, PerturbationReport};
use scorelens_core::provenance::{ComponentScores, HistoryRow, IngestReport, RunRecord};
use scorelens_core::scoring::TokenInfo;
use scorelens_core::{AnalysisOptions, Assignment, ModelConfig, TextSpan};

pub use scorelens_core::provenance::{LoadedExample, ScatterPayload};

/// Every non-2xx response carries this body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default)]
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelsResponse {
    pub models: Vec<ModelConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryInput {
    pub text: String,
    #[serde(default)]
    pub options: AnalysisOptions,
}

impl From<&str> for SummaryInput {
    fn from(text: &str) -> Self {
        SummaryInput {
            text: text.to_string(),
            options: AnalysisOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateAssignmentRequest {
    pub source: String,
    pub summaries: Vec<SummaryInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResponse {
    pub assignment_id: String,
    pub assignment: Assignment,
}

/// Scores a stored assignment, or an inline one when `source` and
/// `summaries` are given instead of `assignment_id`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summaries: Option<Vec<SummaryInput>>,
    pub model_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotScore {
    pub slot_id: String,
    pub model_id: String,
    pub score: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRunResponse {
    pub assignment_id: String,
    pub run: RunRecord,
    pub results: Vec<SlotScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbRequest {
    pub assignment_id: String,
    pub slot_id: String,
    pub model_id: String,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobCreated {
    pub job_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_finished(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordUnderline {
    pub span: TextSpan,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResponse {
    pub job_id: String,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PerturbationReport>,
    /// Words method only: one entry per replaced word.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub word_underlines: Vec<WordUnderline>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

pub fn word_underlines(report: &PerturbationReport) -> Vec<WordUnderline> {
    if report.method != Method::Words {
        return Vec::new();
    }
    report
        .word_underlines()
        .into_iter()
        .map(|(span, value)| WordUnderline { span, value })
        .collect()
}

/// Query string of the attention endpoint. `mode` is `by_layer` (needs
/// `head`), `by_head` (needs `layer`) or `rug` (needs both).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionQuery {
    pub token: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<usize>,
    pub mode: String,
}

impl AttentionQuery {
    pub fn new(token: usize, mode: SliceMode) -> Self {
        let (name, layer, head) = match mode {
            SliceMode::ByLayer { head } => ("by_layer", None, Some(head)),
            SliceMode::ByHead { layer } => ("by_head", Some(layer), None),
            SliceMode::Rug { layer, head } => ("rug", Some(layer), Some(head)),
        };
        AttentionQuery {
            token,
            layer,
            head,
            mode: name.to_string(),
        }
    }

    /// Returns the offending field name on failure.
    pub fn slice_mode(&self) -> Result<SliceMode, (&'static str, String)> {
        let need = |v: Option<usize>, field: &'static str| v.ok_or((field, format!("required for mode `{}`", self.mode)));
        match self.mode.as_str() {
            "by_layer" => Ok(SliceMode::ByLayer { head: need(self.head, "head")? }),
            "by_head" => Ok(SliceMode::ByHead { layer: need(self.layer, "layer")? }),
            "rug" => Ok(SliceMode::Rug {
                layer: need(self.layer, "layer")?,
                head: need(self.head, "head")?,
            }),
            other => Err(("mode", format!("unknown mode `{other}`, expected by_layer, by_head or rug"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionSliceResponse {
    pub model_id: String,
    pub n: usize,
    pub layers: usize,
    pub heads: usize,
    pub window: usize,
    pub global_indices: Vec<usize>,
    pub display_text: String,
    pub tokens: Vec<TokenInfo>,
    pub mode: SliceMode,
    pub slice: Slice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryQuery {
    pub slot: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryResponse {
    pub slot_id: String,
    pub rows: Vec<HistoryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterQuery {
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRequest {
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub report: IngestReport,
    /// Examples held after this ingest.
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeriveRequest {
    pub rubric: Vec<[f64; 6]>,
}

pub type DeriveResponse = ComponentScores;
