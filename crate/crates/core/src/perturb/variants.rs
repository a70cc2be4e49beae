use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grammar::{correct, GrammarMode};
use super::resources::PerturbResources;
use crate::error::{Error, Result};
use crate::text::{split_words, SpanKind, TextSpan, Tokenizer, MASK_MARKER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Words,
    Sentences,
    Tokens,
    Grammar,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Words, Method::Sentences, Method::Tokens, Method::Grammar];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Words => "words",
            Method::Sentences => "sentences",
            Method::Tokens => "tokens",
            Method::Grammar => "grammar",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected words, sentences, tokens or grammar)"))
    }
}

/// A perturbed summary before it is scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub method: Method,
    /// Span of the original summary that was replaced; absent for grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<TextSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grammar_mode: Option<GrammarMode>,
    /// Synonym lemma, mask marker, or the full corrected text.
    pub replacement: String,
    pub variant_text: String,
}

impl Perturbation {
    fn spliced(method: Method, summary: &str, span: &TextSpan, replacement: &str) -> Self {
        Perturbation {
            method,
            span: Some(span.clone()),
            grammar_mode: None,
            replacement: replacement.to_string(),
            variant_text: span.splice(summary, replacement),
        }
    }
}

/// Builds the unscored variants of `summary` for one method, in document
/// order (grammar: word lookup, compound, segmentation).
pub fn generate_variants(
    summary: &str,
    method: Method,
    resources: &PerturbResources,
    tokenizer: &dyn Tokenizer,
) -> Result<Vec<Perturbation>> {
    match method {
        Method::Words => {
            if resources.lexicon.is_empty() {
                return Err(Error::EmptyLexicon);
            }
            Ok(split_words(summary)
                .iter()
                .filter(|s| s.kind == SpanKind::Word && !resources.stopwords.contains(&s.surface))
                .flat_map(|span| {
                    resources
                        .lexicon
                        .synonyms(&span.surface)
                        .iter()
                        .map(move |lemma| Perturbation::spliced(method, summary, span, lemma))
                })
                .collect())
        }
        Method::Sentences => {
            let spans = resources.sentences.split(summary);
            mask_spans(method, summary, &spans, MASK_MARKER)
        }
        Method::Tokens => {
            let spans: Vec<TextSpan> = tokenizer.encode(summary).into_iter().map(|t| t.span).collect();
            mask_spans(method, summary, &spans, tokenizer.mask_token().unwrap_or(MASK_MARKER))
        }
        Method::Grammar => {
            if summary.trim().is_empty() {
                return Err(Error::EmptyInput("summary"));
            }
            Ok(GrammarMode::ALL
                .into_iter()
                .map(|mode| {
                    let corrected = correct(summary, mode, &resources.speller);
                    Perturbation {
                        method,
                        span: None,
                        grammar_mode: Some(mode),
                        replacement: corrected.clone(),
                        variant_text: corrected,
                    }
                })
                .collect())
        }
    }
}

/// One variant per span, each span replaced by `marker`.
pub fn mask_spans(method: Method, summary: &str, spans: &[TextSpan], marker: &str) -> Result<Vec<Perturbation>> {
    if spans.is_empty() {
        return Err(Error::NoSpans);
    }
    Ok(spans
        .iter()
        .map(|span| Perturbation::spliced(method, summary, span, marker))
        .collect())
}
