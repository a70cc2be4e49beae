//! Model registry, input construction, masking and scoring backends.

mod config;
mod external;
mod input;
mod mask;
mod reference;
mod registry;

pub use config::{GlobalMode, ModelConfig, ModelKind};
pub use external::{
    parse_response, AttentionPayload, ExternalScorer, ScoreRequest, ScoreResponse, TokenPayload,
    DEFAULT_CONNECTIONS_PER_ENDPOINT, DEFAULT_TIMEOUT,
};
pub use input::{build_model_input, display_text, summary_offset as summary_span_offset, ModelInput, Segment, TokenInfo};
pub use mask::{build_attention_mask, MaskSpec};
pub use reference::{LayerWeights, Matrix, ReferenceModel, ReferenceOutput};
pub use registry::{ModelRegistry, ScoreResult};
