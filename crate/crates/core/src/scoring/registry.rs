use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use tokio::sync::Semaphore;

use super::config::{ModelConfig, ModelKind};
use super::external::{ExternalScorer, ScoreRequest, DEFAULT_CONNECTIONS_PER_ENDPOINT, DEFAULT_TIMEOUT};
use super::input::{build_model_input, TokenInfo};
use super::reference::ReferenceModel;
use crate::attention::AttentionTensor;
use crate::error::{Error, Result};
use crate::text::{Tokenizer, TokenizerRegistry};

/// A model's score for one source/summary pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreResult {
    pub model_id: String,
    /// z-normalized units: 0 is the training mean, negative is below it.
    pub score: f64,
    pub truncated: bool,
    pub tokens: Vec<TokenInfo>,
    #[serde(skip)]
    pub attention: Option<Arc<AttentionTensor>>,
}

#[derive(Debug, Clone)]
enum Backend {
    Reference(Arc<ReferenceModel>),
    External(ExternalScorer),
}

#[derive(Debug, Clone)]
struct Entry {
    config: ModelConfig,
    backend: Backend,
}

/// Registered models by id, in registration order. Immutable once built,
/// so it can be shared freely across tasks.
#[derive(Debug, Clone)]
pub struct ModelRegistry {
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
    tokenizers: TokenizerRegistry,
    endpoint_permits: HashMap<String, Arc<Semaphore>>,
    timeout: Duration,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        ModelRegistry {
            entries: Vec::new(),
            index: HashMap::new(),
            tokenizers: TokenizerRegistry::default(),
            endpoint_permits: HashMap::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

impl ModelRegistry {
    pub fn with_timeout(timeout: Duration) -> Self {
        ModelRegistry {
            timeout,
            ..Default::default()
        }
    }

    pub fn from_configs(configs: impl IntoIterator<Item = ModelConfig>, timeout: Duration) -> Result<Self> {
        let mut registry = Self::with_timeout(timeout);
        for config in configs {
            registry.register(config)?;
        }
        Ok(registry)
    }

    /// Loads a JSON array of [`ModelConfig`] records.
    pub fn load(path: impl AsRef<Path>, timeout: Duration) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let configs: Vec<ModelConfig> = serde_json::from_str(&text)?;
        Self::from_configs(configs, timeout)
    }

    pub fn register(&mut self, config: ModelConfig) -> Result<()> {
        config.validate()?;
        self.tokenizers.get(&config.tokenizer)?;
        if self.index.contains_key(&config.model_id) {
            return Err(Error::InvalidConfig {
                model_id: config.model_id.clone(),
                reason: "duplicate model id".into(),
            });
        }
        let backend = match config.kind {
            ModelKind::Reference => Backend::Reference(Arc::new(ReferenceModel::new(config.clone())?)),
            ModelKind::External => {
                let endpoint = config.endpoint.clone().unwrap_or_default();
                let permits = self
                    .endpoint_permits
                    .entry(endpoint.clone())
                    .or_insert_with(|| Arc::new(Semaphore::new(DEFAULT_CONNECTIONS_PER_ENDPOINT)))
                    .clone();
                Backend::External(ExternalScorer::new(endpoint, self.timeout, permits)?)
            }
        };
        self.index.insert(config.model_id.clone(), self.entries.len());
        self.entries.push(Entry { config, backend });
        Ok(())
    }

    pub fn register_tokenizer(&mut self, tokenizer: Arc<dyn Tokenizer>) {
        self.tokenizers.register(tokenizer);
    }

    pub fn configs(&self) -> impl Iterator<Item = &ModelConfig> {
        self.entries.iter().map(|e| &e.config)
    }

    fn entry(&self, model_id: &str) -> Result<&Entry> {
        self.index
            .get(model_id)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| Error::ModelNotFound(model_id.to_string()))
    }

    pub fn config(&self, model_id: &str) -> Result<&ModelConfig> {
        Ok(&self.entry(model_id)?.config)
    }

    pub fn tokenizers(&self) -> &TokenizerRegistry {
        &self.tokenizers
    }

    pub fn tokenizer_for(&self, model_id: &str) -> Result<Arc<dyn Tokenizer>> {
        self.tokenizers.get(&self.config(model_id)?.tokenizer)
    }

    pub fn reference_model(&self, model_id: &str) -> Result<Option<Arc<ReferenceModel>>> {
        Ok(match &self.entry(model_id)?.backend {
            Backend::Reference(m) => Some(m.clone()),
            Backend::External(_) => None,
        })
    }

    /// Scores one pair with a reference model on the current thread.
    pub fn score_reference(
        model: &ReferenceModel,
        source: &str,
        summary: &str,
        want_attention: bool,
    ) -> Result<ScoreResult> {
        let config = model.config();
        let input = build_model_input(source, summary, config, model.tokenizer())?;
        let (score, attention) = if want_attention {
            let (score, tensor) = model.reference_forward(&input)?;
            (score, Some(Arc::new(tensor)))
        } else {
            (model.forward(&input)?.score, None)
        };
        Ok(ScoreResult {
            model_id: config.model_id.clone(),
            score,
            truncated: input.truncated,
            tokens: input.token_info(),
            attention,
        })
    }

    pub async fn score_pair(
        &self,
        model_id: &str,
        source: &str,
        summary: &str,
        want_attention: bool,
    ) -> Result<ScoreResult> {
        match &self.entry(model_id)?.backend {
            Backend::Reference(model) => {
                let (model, source, summary) = (model.clone(), source.to_string(), summary.to_string());
                tokio::task::spawn_blocking(move || {
                    Self::score_reference(&model, &source, &summary, want_attention)
                })
                .await
                .expect("scoring task panicked")
            }
            Backend::External(scorer) => {
                let request = ScoreRequest {
                    model_id: model_id.to_string(),
                    source: source.to_string(),
                    summary: summary.to_string(),
                    want_attention,
                };
                let response = scorer.score(&request).await?;
                let attention = match (want_attention, &response.attention) {
                    (true, Some(payload)) => Some(Arc::new(payload.decode()?)),
                    _ => None,
                };
                Ok(ScoreResult {
                    model_id: model_id.to_string(),
                    score: response.score,
                    truncated: response.truncated,
                    tokens: response.tokens,
                    attention,
                })
            }
        }
    }
}
