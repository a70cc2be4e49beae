use futures::{StreamExt, TryStreamExt};
use serde::{Deserialize, Serialize};

use super::resources::PerturbResources;
use super::variants::{generate_variants, mask_spans, Method, Perturbation};
use crate::error::{Error, Result};
use crate::scoring::{summary_span_offset, ModelKind, ModelRegistry, Segment};
use crate::text::{SpanKind, TextSpan, MASK_MARKER};

/// A scored variant. `delta = score - baseline_score`, so a positive delta
/// means the perturbation raised the score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    #[serde(flatten)]
    pub perturbation: Perturbation,
    pub score: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub model_id: String,
    pub method: Method,
    pub baseline_score: f64,
    pub variants: Vec<Variant>,
}

impl PerturbationReport {
    /// For the words method: each replaced word span with the signed delta
    /// of largest magnitude over its synonyms, in document order.
    pub fn word_underlines(&self) -> Vec<(TextSpan, f64)> {
        let mut groups: Vec<(TextSpan, Vec<f64>)> = Vec::new();
        for v in &self.variants {
            let Some(span) = &v.perturbation.span else { continue };
            match groups.last_mut() {
                Some((s, deltas)) if s == span => deltas.push(v.delta),
                _ => groups.push((span.clone(), vec![v.delta])),
            }
        }
        groups
            .into_iter()
            .map(|(span, deltas)| {
                let value = word_underline_value(&deltas).expect("groups are non-empty");
                (span, value)
            })
            .collect()
    }
}

/// The delta with the largest absolute value, sign kept; the first one
/// wins ties.
pub fn word_underline_value(deltas: &[f64]) -> Result<f64> {
    let mut iter = deltas.iter().copied();
    let first = iter.next().ok_or(Error::EmptyInput("deltas"))?;
    Ok(iter.fold(first, |best, d| if d.abs() > best.abs() { d } else { best }))
}

/// Scores every variant of `summary` against the unchanged `source`.
///
/// Variants are scored with up to `concurrency` requests in flight, but the
/// report keeps document order. Any scoring failure fails the whole run,
/// naming the variant index.
pub async fn run_perturbation(
    registry: &ModelRegistry,
    resources: &PerturbResources,
    source: &str,
    summary: &str,
    model_id: &str,
    method: Method,
    concurrency: usize,
) -> Result<PerturbationReport> {
    let config = registry.config(model_id)?;
    let tokenizer = registry.tokenizer_for(model_id)?;
    let baseline = registry.score_pair(model_id, source, summary, false).await?;

    let perturbations = if method == Method::Tokens && config.kind == ModelKind::External && !baseline.tokens.is_empty() {
        // External scorers report their own token spans; use those so the
        // masked units line up with the model's input positions.
        let offset = summary_span_offset(source);
        let spans: Vec<TextSpan> = baseline
            .tokens
            .iter()
            .filter(|t| t.segment == Segment::Summary)
            .filter_map(|t| {
                let (s, e) = (t.start.checked_sub(offset)?, t.end.checked_sub(offset)?);
                (s < e && e <= summary.len() && summary.is_char_boundary(s) && summary.is_char_boundary(e))
                    .then(|| TextSpan::new(summary, s, e, SpanKind::Subword))
            })
            .collect();
        mask_spans(method, summary, &spans, MASK_MARKER)?
    } else {
        generate_variants(summary, method, resources, tokenizer.as_ref())?
    };

    let baseline_score = baseline.score;
    let variants = futures::stream::iter(perturbations.into_iter().enumerate())
        .map(|(index, perturbation)| async move {
            let scored = registry
                .score_pair(model_id, source, &perturbation.variant_text, false)
                .await
                .map_err(|e| Error::VariantFailed {
                    index,
                    source: Box::new(e),
                })?;
            Ok::<_, Error>(Variant {
                perturbation,
                score: scored.score,
                delta: scored.score - baseline_score,
            })
        })
        .buffered(concurrency.max(1))
        .try_collect()
        .await?;

    Ok(PerturbationReport {
        model_id: model_id.to_string(),
        method,
        baseline_score,
        variants,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::perturb::Lexicon;
    use crate::scoring::{ModelConfig, DEFAULT_TIMEOUT};

    #[test]
    fn underline_value_rule() {
        assert_eq!(word_underline_value(&[0.3, -0.5, 0.2]).unwrap(), -0.5);
        assert_eq!(word_underline_value(&[0.0]).unwrap(), 0.0);
        assert_eq!(word_underline_value(&[0.4, -0.4]).unwrap(), 0.4);
        assert!(word_underline_value(&[]).is_err());
    }

    fn registry() -> ModelRegistry {
        let mut cfg = ModelConfig::test_scale("m", 7);
        cfg.layers = 2;
        cfg.heads = 2;
        ModelRegistry::from_configs([cfg], DEFAULT_TIMEOUT).unwrap()
    }

    #[tokio::test]
    async fn identity_perturbation_has_zero_delta() {
        let resources = PerturbResources {
            lexicon: Arc::new(Lexicon::from_pairs([("cat", &["cat"][..])])),
            ..PerturbResources::bundled()
        };
        let report = run_perturbation(&registry(), &resources, "src text", "The cat sat.", "m", Method::Words, 4)
            .await
            .unwrap();
        assert_eq!(report.variants.len(), 1);
        assert_eq!(report.variants[0].delta, 0.0);
        assert_eq!(report.variants[0].score.to_bits(), report.baseline_score.to_bits());
    }

    #[tokio::test]
    async fn unknown_model_fails() {
        let err = run_perturbation(&registry(), &PerturbResources::bundled(), "s", "t", "x", Method::Tokens, 1)
            .await
            .unwrap_err();
        assert!(matches!(err, Error::ModelNotFound(_)));
    }
}
