use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tokenizer not registered: {0}")]
    TokenizerNotRegistered(String),

    #[error("model not found: {0}")]
    ModelNotFound(String),

    #[error("summary too long for model: {tokens} tokens, limit {limit}")]
    SummaryTooLong { tokens: usize, limit: usize },

    #[error("invalid model config `{model_id}`: {reason}")]
    InvalidConfig { model_id: String, reason: String },

    #[error("external scorer {endpoint} unreachable: {reason}")]
    ExternalUnreachable { endpoint: String, reason: String },

    #[error("external scorer {endpoint} timed out after {seconds} s")]
    ExternalTimeout { endpoint: String, seconds: u64 },

    #[error("external scorer {endpoint} returned status {status}")]
    ExternalStatus { endpoint: String, status: u16 },

    #[error("schema violation at `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("mask violation at ({layer},{head},{query},{key})")]
    MaskViolation {
        layer: usize,
        head: usize,
        query: usize,
        key: usize,
    },

    #[error("index out of range: {what} = {index}, bound {bound}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("no spans")]
    NoSpans,

    #[error("lexicon is empty")]
    EmptyLexicon,

    #[error("variant {index} failed: {source}")]
    VariantFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate rubric criterion {0}")]
    DegenerateRubric(usize),

    #[error("degenerate rubric: principal component {0} has zero variance")]
    DegenerateComponent(usize),

    #[error("unknown slot `{0}`")]
    UnknownSlot(String),

    #[error("rubric needs at least 3 rows, got {0}")]
    TooFewRows(usize),

    #[error("invalid rubric value {value} at row {row}, column {column}")]
    RubricRange { row: usize, column: usize, value: f64 },

    #[error("unknown training example: {0}")]
    UnknownExample(String),

    #[error("corrupt event log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },

    #[error("parse error in {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True when the failure was caused by the caller's input rather than
    /// the engine or a downstream scorer.
    pub fn is_client_error(&self) -> bool {
        matches!(
            self,
            Error::TokenizerNotRegistered(_)
                | Error::ModelNotFound(_)
                | Error::SummaryTooLong { .. }
                | Error::OutOfRange { .. }
                | Error::NoSpans
                | Error::EmptyLexicon
                | Error::EmptyInput(_)
                | Error::DegenerateRubric(_)
                | Error::DegenerateComponent(_)
                | Error::UnknownSlot(_)
                | Error::TooFewRows(_)
                | Error::RubricRange { .. }
                | Error::UnknownExample(_)
        ) || matches!(self, Error::VariantFailed { source, .. } if source.is_client_error())
    }
}
