use std::collections::HashSet;
use std::path::Path;

use super::span::{SpanKind, TextSpan};
use crate::error::Result;

/// Lowercased abbreviations (without their final period) that do not end a
/// sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc", "e.g", "i.e", "cf",
    "inc", "ltd", "co", "corp", "no", "nos", "fig", "figs", "al", "approx", "dept", "est",
    "gen", "gov", "sen", "rep", "capt", "col", "lt", "sgt", "ave", "rd", "u.s", "u.k", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "vol", "pp",
    "ch", "ed", "eds",
];

const TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’'];

/// Rule-based sentence boundary detector.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing quotes or brackets)
/// when followed by whitespace and an uppercase letter, an opening quote, or
/// the end of the text. A period after a listed abbreviation never ends a
/// sentence. Blank lines are hard boundaries.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let abbreviations = abbreviations
            .into_iter()
            .map(|a| a.as_ref().trim().trim_end_matches('.').to_lowercase())
            .filter(|a| !a.is_empty())
            .collect();
        SentenceSplitter { abbreviations }
    }

    /// Reads one abbreviation per line; blank lines and `#` comments are
    /// ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        Ok(Self::with_abbreviations(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(&word.to_lowercase())
    }

    pub fn split(&self, text: &str) -> Vec<TextSpan> {
        let mut spans = Vec::new();
        for (block_start, block_end) in blocks(text) {
            self.split_block(text, block_start, block_end, &mut spans);
        }
        spans
    }

    fn split_block(&self, text: &str, start: usize, end: usize, out: &mut Vec<TextSpan>) {
        let block = &text[start..end];
        let chars: Vec<(usize, char)> = block.char_indices().collect();
        let mut sentence_start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (off, c) = chars[i];
            if !TERMINALS.contains(&c) {
                i += 1;
                continue;
            }
            // Absorb runs like "?!" or "..." and any closing quotes/brackets.
            let mut j = i + 1;
            while j < chars.len() && TERMINALS.contains(&chars[j].1) {
                j += 1;
            }
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let boundary_end = chars.get(j).map_or(block.len(), |x| x.0);
            let at_end = block[boundary_end..].trim().is_empty();
            let followed_ok = at_end || {
                let mut k = j;
                let mut saw_space = false;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    saw_space = true;
                    k += 1;
                }
                saw_space
                    && chars.get(k).is_some_and(|(_, n)| {
                        n.is_uppercase() || n.is_ascii_digit() || "\"“'‘([".contains(*n)
                    })
            };
            let abbreviation = c == '.' && j == i + 1 && self.ends_with_abbreviation(&block[..off]);
            if followed_ok && !abbreviation {
                push_trimmed(text, start + sentence_start, start + boundary_end, out);
                sentence_start = boundary_end;
            }
            i = j.max(i + 1);
        }
        push_trimmed(text, start + sentence_start, end, out);
    }

    fn ends_with_abbreviation(&self, before: &str) -> bool {
        let word = before
            .rsplit(|c: char| c.is_whitespace() || "\"“'‘([".contains(c))
            .next()
            .unwrap_or("");
        !word.is_empty() && self.is_abbreviation(word)
    }
}

/// Splits on blank lines (a newline, optional horizontal whitespace, newline).
fn blocks(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j] == b' ' || bytes[j] == b'\t' || bytes[j] == b'\r') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'\n' {
                out.push((start, i));
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    out.push((start, text.len()));
    out
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<TextSpan>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        out.push(TextSpan::new(text, start + lead, end - trail, SpanKind::Sentence));
    }
}
