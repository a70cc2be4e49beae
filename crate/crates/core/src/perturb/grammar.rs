use serde::{Deserialize, Serialize};

use super::symspell::{SymSpell, Verbosity};
use crate::text::{split_words, SpanKind};

/// Longest piece considered when segmenting run-together words.
pub const MAX_SEGMENT_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammarMode {
    /// Per-word dictionary lookup; casing and punctuation kept.
    WordLookup,
    /// Whole-text multi-word correction; output lowercased, punctuation gone.
    Compound,
    /// Splits run-together words; casing kept, punctuation dropped.
    Segmentation,
}

impl GrammarMode {
    pub const ALL: [GrammarMode; 3] = [
        GrammarMode::WordLookup,
        GrammarMode::Compound,
        GrammarMode::Segmentation,
    ];
}

pub fn correct(text: &str, mode: GrammarMode, speller: &SymSpell) -> String {
    match mode {
        GrammarMode::WordLookup => correct_words(text, speller),
        GrammarMode::Compound => speller.lookup_compound(text, speller.max_edit()).term,
        GrammarMode::Segmentation => segment_words(text, speller),
    }
}

/// Replaces each misspelled word span with its closest dictionary word,
/// leaving every other byte in place.
pub fn correct_words(text: &str, speller: &SymSpell) -> String {
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in split_words(text) {
        if span.kind != SpanKind::Word || !span.surface.chars().all(char::is_alphabetic) {
            continue;
        }
        let lower = span.surface.to_lowercase();
        let Some(best) = speller
            .lookup(&lower, Verbosity::Top, speller.max_edit())
            .into_iter()
            .next()
        else {
            continue;
        };
        if best.term == lower {
            continue;
        }
        out.push_str(&text[cursor..span.start]);
        out.push_str(&transfer_case(&span.surface, &best.term));
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Segments each whitespace-separated chunk after dropping punctuation.
pub fn segment_words(text: &str, speller: &SymSpell) -> String {
    text.split_whitespace()
        .map(|chunk| chunk.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|chunk| !chunk.is_empty())
        .map(|chunk| speller.word_segmentation(&chunk, 0, MAX_SEGMENT_LEN).segmented)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Applies the casing pattern of `original` (all caps, capitalised, or
/// lower) to `replacement`.
pub fn transfer_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut chars = replacement.chars();
        return match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}
