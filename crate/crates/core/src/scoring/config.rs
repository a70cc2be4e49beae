use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::REFERENCE_TOKENIZER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Reference,
    External,
}

/// Which tokens receive global attention besides the BEGIN marker.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalMode {
    #[default]
    ClsOnly,
    SummaryGlobal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub kind: ModelKind,
    pub layers: usize,
    pub heads: usize,
    pub embed_dim: usize,
    /// Total sliding-window width; each token sees `window / 2` neighbours
    /// per side.
    pub window: usize,
    pub max_len: usize,
    #[serde(default)]
    pub global_mode: GlobalMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub score_dimension: String,
    #[serde(default = "default_tokenizer")]
    pub tokenizer: String,
}

fn default_tokenizer() -> String {
    REFERENCE_TOKENIZER.to_string()
}

impl ModelConfig {
    /// Small reference model used by tests and the default service config.
    pub fn test_scale(model_id: impl Into<String>, seed: u64) -> Self {
        ModelConfig {
            model_id: model_id.into(),
            kind: ModelKind::Reference,
            layers: 4,
            heads: 4,
            embed_dim: 32,
            window: 8,
            max_len: 512,
            global_mode: GlobalMode::ClsOnly,
            seed,
            endpoint: None,
            score_dimension: String::new(),
            tokenizer: default_tokenizer(),
        }
    }

    /// Longformer-base dimensions.
    pub fn full_scale(model_id: impl Into<String>, window: usize, seed: u64) -> Self {
        ModelConfig {
            layers: 12,
            heads: 12,
            embed_dim: 768,
            window,
            max_len: 4096,
            ..Self::test_scale(model_id, seed)
        }
    }

    pub fn with_global_mode(mut self, mode: GlobalMode) -> Self {
        self.global_mode = mode;
        self
    }

    pub fn half_window(&self) -> usize {
        self.window / 2
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidConfig {
                model_id: self.model_id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.model_id.is_empty() {
            return fail("model_id must be non-empty");
        }
        if self.layers == 0 || self.heads == 0 {
            return fail("layers and heads must be at least 1");
        }
        if self.embed_dim == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return fail("embed_dim must be a positive multiple of heads");
        }
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return fail("window must be even and at least 2");
        }
        if self.max_len < 3 {
            return fail("max_len must be at least 3");
        }
        if self.kind == ModelKind::External && self.endpoint.is_none() {
            return fail("external models need an endpoint");
        }
        Ok(())
    }

    /// Copy safe to hand to clients.
    pub fn redacted(&self) -> Self {
        ModelConfig {
            endpoint: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelConfig::test_scale("m", 1).validate().is_ok());
        assert!(ModelConfig::full_scale("m", 512, 1).validate().is_ok());
        let bad = |f: fn(&mut ModelConfig)| {
            let mut c = ModelConfig::test_scale("m", 1);
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.window = 7));
        assert!(bad(|c| c.window = 0));
        assert!(bad(|c| c.embed_dim = 30));
        assert!(bad(|c| c.layers = 0));
        assert!(bad(|c| c.max_len = 2));
        assert!(bad(|c| c.kind = ModelKind::External));
    }

    #[test]
    fn json_shape() {
        let json = r#"[{"model_id":"content","kind":"reference","layers":2,"heads":2,
            "embed_dim":8,"window":4,"max_len":64,"global_mode":"summary_global","seed":7}]"#;
        let models: Vec<ModelConfig> = serde_json::from_str(json).unwrap();
        assert_eq!(models[0].global_mode, GlobalMode::SummaryGlobal);
        assert_eq!(models[0].tokenizer, "reference");
    }
}
