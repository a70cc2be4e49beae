use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::config::{GlobalMode, ModelConfig};
use crate::error::{Error, Result};
use crate::text::{HashingTokenizer, SpanKind, TextSpan, Tokenizer};

pub const BEGIN_MARKER: &str = "[CLS]";
pub const SEP_MARKER: &str = "[SEP]";
pub const END_MARKER: &str = "[END]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    BeginMarker,
    Source,
    Separator,
    Summary,
    EndMarker,
}

/// Per-token metadata as carried on the wire. Offsets index the display
/// text built by [`display_text`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenInfo {
    pub start: usize,
    pub end: usize,
    pub segment: Segment,
    pub global: bool,
}

/// The text every token span of a [`ModelInput`] points into:
/// `"[CLS] {source} [SEP] {summary} [END]"`.
pub fn display_text(source: &str, summary: &str) -> String {
    format!("{BEGIN_MARKER} {source} {SEP_MARKER} {summary} {END_MARKER}")
}

pub fn source_offset() -> usize {
    BEGIN_MARKER.len() + 1
}

pub fn summary_offset(source: &str) -> usize {
    source_offset() + source.len() + 1 + SEP_MARKER.len() + 1
}

/// Joint source + summary sequence laid out as
/// `[BEGIN] source [SEP] summary [END]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub tokens: Vec<u32>,
    pub spans: Vec<TextSpan>,
    pub segments: Vec<Segment>,
    pub global_flags: Vec<bool>,
    pub truncated: bool,
    pub display_text: String,
}

impl ModelInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token positions of the summary segment.
    pub fn summary_range(&self) -> Range<usize> {
        let start = self
            .segments
            .iter()
            .position(|s| *s == Segment::Separator)
            .map_or(0, |p| p + 1);
        start..self.len().saturating_sub(1)
    }

    pub fn token_info(&self) -> Vec<TokenInfo> {
        self.spans
            .iter()
            .zip(&self.segments)
            .zip(&self.global_flags)
            .map(|((span, segment), global)| TokenInfo {
                start: span.start,
                end: span.end,
                segment: *segment,
                global: *global,
            })
            .collect()
    }
}

pub fn build_model_input(
    source: &str,
    summary: &str,
    config: &ModelConfig,
    tokenizer: &dyn Tokenizer,
) -> Result<ModelInput> {
    let summary_tokens = tokenizer.encode(summary);
    let budget = config.max_len.saturating_sub(3);
    if summary_tokens.len() > budget {
        return Err(Error::SummaryTooLong {
            tokens: summary_tokens.len(),
            limit: budget,
        });
    }
    let mut source_tokens = tokenizer.encode(source);
    let keep = source_tokens.len().min(budget - summary_tokens.len());
    let truncated = keep < source_tokens.len();
    source_tokens.truncate(keep);

    let display = display_text(source, summary);
    let n = source_tokens.len() + summary_tokens.len() + 3;
    let mut input = ModelInput {
        tokens: Vec::with_capacity(n),
        spans: Vec::with_capacity(n),
        segments: Vec::with_capacity(n),
        global_flags: Vec::with_capacity(n),
        truncated,
        display_text: String::new(),
    };
    let summary_global = config.global_mode == GlobalMode::SummaryGlobal;
    let mut push = |id: u32, span: TextSpan, segment: Segment, global: bool| {
        input.tokens.push(id);
        input.spans.push(span);
        input.segments.push(segment);
        input.global_flags.push(global);
    };

    let marker = |start: usize, text: &str| TextSpan::new(&display, start, start + text.len(), SpanKind::Subword);
    push(HashingTokenizer::BEGIN, marker(0, BEGIN_MARKER), Segment::BeginMarker, true);
    let src_off = source_offset();
    for t in source_tokens {
        push(t.id, t.span.shifted(src_off), Segment::Source, false);
    }
    let sep_start = src_off + source.len() + 1;
    push(HashingTokenizer::SEP, marker(sep_start, SEP_MARKER), Segment::Separator, false);
    let sum_off = summary_offset(source);
    for t in summary_tokens {
        push(t.id, t.span.shifted(sum_off), Segment::Summary, summary_global);
    }
    let end_start = sum_off + summary.len() + 1;
    push(HashingTokenizer::END, marker(end_start, END_MARKER), Segment::EndMarker, false);

    input.display_text = display;
    Ok(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::HashingTokenizer;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{}", i % 10)).collect::<Vec<_>>().join(" ")
    }

    fn config() -> ModelConfig {
        ModelConfig::test_scale("m", 1)
    }

    #[test]
    fn layout_arithmetic() {
        let tok = HashingTokenizer::default();
        let input = build_model_input(&words(10), &words(5), &config(), &tok).unwrap();
        assert_eq!(input.len(), 18);
        assert!(!input.truncated);
        assert_eq!(input.segments[0], Segment::BeginMarker);
        assert_eq!(input.segments[11], Segment::Separator);
        assert_eq!(input.segments[17], Segment::EndMarker);
        assert_eq!(input.summary_range(), 12..17);
        for span in &input.spans {
            assert_eq!(&input.display_text[span.start..span.end], span.surface);
        }
    }

    #[test]
    fn truncates_source_tail_only() {
        let tok = HashingTokenizer::default();
        let mut cfg = config();
        cfg.max_len = 4096;
        let input = build_model_input(&words(5000), &words(100), &cfg, &tok).unwrap();
        assert_eq!(input.len(), 4096);
        assert!(input.truncated);
        let summary: Vec<_> = input.summary_range().collect();
        assert_eq!(summary.len(), 100);
        // Kept source tokens are a prefix of the full source tokenization.
        let full = tok.encode(&words(5000));
        assert_eq!(input.tokens[1..3993], full[..3992].iter().map(|t| t.id).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn summary_global_flags() {
        let tok = HashingTokenizer::default();
        let cfg = config().with_global_mode(GlobalMode::SummaryGlobal);
        let input = build_model_input(&words(10), &words(5), &cfg, &tok).unwrap();
        let globals: Vec<usize> = (0..input.len()).filter(|&i| input.global_flags[i]).collect();
        assert_eq!(globals, [0, 12, 13, 14, 15, 16]);

        let input = build_model_input(&words(10), &words(5), &config(), &tok).unwrap();
        let globals: Vec<usize> = (0..input.len()).filter(|&i| input.global_flags[i]).collect();
        assert_eq!(globals, [0]);
    }

    #[test]
    fn summary_too_long() {
        let tok = HashingTokenizer::default();
        let mut cfg = config();
        cfg.max_len = 10;
        let err = build_model_input("src", &words(8), &cfg, &tok).unwrap_err();
        assert!(err.to_string().contains("summary too long for model"));
        // Exactly at the limit still fits, with the source dropped entirely.
        let input = build_model_input("src", &words(7), &cfg, &tok).unwrap();
        assert_eq!(input.len(), 10);
        assert!(input.truncated);
    }
}
