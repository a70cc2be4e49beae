use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Word,
    Punctuation,
    Sentence,
    Subword,
}

/// A half-open byte range `[start, end)` into some source string, together
/// with the exact substring it covers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextSpan {
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
    pub surface: String,
}

impl TextSpan {
    /// Builds a span over `text[start..end]`.
    ///
    /// Panics if the range is empty or does not fall on char boundaries;
    /// every caller in this crate derives offsets from char iteration.
    pub fn new(text: &str, start: usize, end: usize, kind: SpanKind) -> Self {
        assert!(start < end, "empty span {start}..{end}");
        TextSpan {
            start,
            end,
            kind,
            surface: text[start..end].to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn shifted(&self, offset: usize) -> Self {
        TextSpan {
            start: self.start + offset,
            end: self.end + offset,
            kind: self.kind,
            surface: self.surface.clone(),
        }
    }

    /// Returns `text` with this span's bytes replaced by `replacement`.
    pub fn splice(&self, text: &str, replacement: &str) -> String {
        let mut out = String::with_capacity(text.len() + replacement.len());
        out.push_str(&text[..self.start]);
        out.push_str(replacement);
        out.push_str(&text[self.end..]);
        out
    }
}
