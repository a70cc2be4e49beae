//! Engine behind the scorelens workbench.
//!
//! The crate scores source/summary pairs with pluggable model backends,
//! perturbs summaries to measure span importance, packs sliding-window
//! attention into a sparse layout for slicing, and keeps an append-only
//! provenance log next to an expert-scored training corpus.

pub mod assignment;
pub mod attention;
pub mod error;
pub mod perturb;
pub mod provenance;
pub mod scoring;
pub mod text;

pub use assignment::{AnalysisOptions, Assignment, Slot};
pub use attention::{AttentionTensor, CellState, SliceMode, StorageMode};
pub use error::{Error, Result};
pub use perturb::{Method, PerturbationReport, Variant};
pub use provenance::{RunLog, RunRecord, TrainingCorpus, TrainingExample};
pub use scoring::{GlobalMode, ModelConfig, ModelKind, ModelRegistry, ScoreResult};
pub use text::{SpanKind, TextSpan};
