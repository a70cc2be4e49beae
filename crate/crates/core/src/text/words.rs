use super::sentences::DEFAULT_ABBREVIATIONS;
use super::span::{SpanKind, TextSpan};

// Penn Treebank style rule table.

const OPENING: &[char] = &['"', '\'', '`', '(', '[', '{', '<', '$', '#', '@', '¿', '¡', '“', '‘'];
const CLOSING: &[char] = &[
    '"', '\'', ')', ']', '}', '>', ',', ';', ':', '!', '?', '%', '”', '’',
];
// Always split out, wherever they occur inside a chunk.
const INTERNAL: &[char] = &['"', '(', ')', '[', ']', '{', '}', ';', '!', '?', '“', '”', '…'];
// Split out unless both neighbours are digits ("1,000", "10:30").
const INTERNAL_UNLESS_NUMERIC: &[char] = &[',', ':'];
const MULTI_CHAR: &[&str] = &["--", "..."];

const CONTRACTION_SUFFIXES: &[&str] = &[
    "n't", "n’t", "'ll", "’ll", "'re", "’re", "'ve", "’ve", "'s", "’s", "'m", "’m", "'d", "’d",
];

/// Whole-word splits; each entry is (word, byte index of the split).
const SPECIAL_SPLITS: &[(&str, usize)] = &[
    ("cannot", 3),
    ("gimme", 3),
    ("gonna", 3),
    ("gotta", 3),
    ("lemme", 3),
    ("wanna", 3),
    ("'tis", 2),
    ("'twas", 2),
];

/// Treebank-style word tokenization.
///
/// Returns word and punctuation spans in document order. Contractions are
/// split ("don't" becomes "do" + "n't") and punctuation glued to words is
/// separated out.
pub fn split_words(text: &str) -> Vec<TextSpan> {
    let mut spans = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                tokenize_chunk(text, s, i, &mut spans);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        tokenize_chunk(text, s, text.len(), &mut spans);
    }
    spans
}

fn push(text: &str, start: usize, end: usize, out: &mut Vec<TextSpan>) {
    if start >= end {
        return;
    }
    let kind = if text[start..end].chars().any(char::is_alphanumeric) {
        SpanKind::Word
    } else {
        SpanKind::Punctuation
    };
    out.push(TextSpan::new(text, start, end, kind));
}

fn tokenize_chunk(text: &str, start: usize, end: usize, out: &mut Vec<TextSpan>) {
    let chunk = &text[start..end];
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut piece_start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        let rest = &chunk[off..];
        if let Some(m) = MULTI_CHAR.iter().find(|m| rest.starts_with(**m)) {
            peel_piece(text, start + piece_start, start + off, out);
            let mut len = m.len();
            // Runs such as "----" or "....." stay one token.
            let unit = m.as_bytes()[0];
            while rest.as_bytes().get(len) == Some(&unit) {
                len += 1;
            }
            push(text, start + off, start + off + len, out);
            piece_start = off + len;
            while i < chars.len() && chars[i].0 < piece_start {
                i += 1;
            }
            continue;
        }
        let numeric_guard = INTERNAL_UNLESS_NUMERIC.contains(&c) && {
            let prev = i.checked_sub(1).map(|p| chars[p].1);
            let next = chars.get(i + 1).map(|n| n.1);
            matches!((prev, next), (Some(p), Some(n)) if p.is_ascii_digit() && n.is_ascii_digit())
        };
        if INTERNAL.contains(&c) || (INTERNAL_UNLESS_NUMERIC.contains(&c) && !numeric_guard) {
            peel_piece(text, start + piece_start, start + off, out);
            push(text, start + off, start + off + c.len_utf8(), out);
            piece_start = off + c.len_utf8();
        }
        i += 1;
    }
    peel_piece(text, start + piece_start, end, out);
}

/// Strips opening and closing punctuation, then applies contraction rules to
/// what remains.
fn peel_piece(text: &str, mut start: usize, mut end: usize, out: &mut Vec<TextSpan>) {
    if start >= end {
        return;
    }
    loop {
        let piece = &text[start..end];
        let Some(c) = piece.chars().next() else { return };
        if !OPENING.contains(&c) || piece.len() == c.len_utf8() {
            break;
        }
        if (c == '\'' || c == '’') && is_contraction_form(piece) {
            break;
        }
        push(text, start, start + c.len_utf8(), out);
        start += c.len_utf8();
    }

    let mut trailing = Vec::new();
    loop {
        let piece = &text[start..end];
        let Some(c) = piece.chars().next_back() else { break };
        if piece.len() == c.len_utf8() {
            break;
        }
        if c == '.' {
            if piece.ends_with("...") {
                trailing.push((end - 3, end));
                end -= 3;
                continue;
            }
            if should_split_period(piece) {
                trailing.push((end - 1, end));
                end -= 1;
                continue;
            }
            break;
        }
        if CLOSING.contains(&c) {
            if (c == '\'' || c == '’') && is_contraction_form(piece) {
                break;
            }
            trailing.push((end - c.len_utf8(), end));
            end -= c.len_utf8();
            continue;
        }
        break;
    }

    split_contractions(text, start, end, out);
    for (s, e) in trailing.into_iter().rev() {
        push(text, s, e, out);
    }
}

fn is_contraction_form(piece: &str) -> bool {
    let lower = piece.to_lowercase();
    CONTRACTION_SUFFIXES.contains(&lower.as_str())
        || SPECIAL_SPLITS.iter().any(|(w, _)| *w == lower)
}

fn should_split_period(piece: &str) -> bool {
    let body = &piece[..piece.len() - 1];
    if body.is_empty() || body.ends_with('.') {
        return false;
    }
    // Initialisms such as "U.S." keep their final period.
    if body.contains('.') && body.chars().any(char::is_alphabetic) {
        return false;
    }
    let lower = body.to_lowercase();
    !DEFAULT_ABBREVIATIONS.contains(&lower.as_str())
}

fn split_contractions(text: &str, start: usize, end: usize, out: &mut Vec<TextSpan>) {
    if start >= end {
        return;
    }
    let piece = &text[start..end];
    let lower = piece.to_lowercase();
    // Lowercasing may change byte lengths for non-ASCII; rules are ASCII-only
    // apart from the curly apostrophe, which lowercases to itself.
    if lower.len() == piece.len() {
        if let Some((_, at)) = SPECIAL_SPLITS.iter().find(|(w, _)| *w == lower) {
            push(text, start, start + at, out);
            push(text, start + at, end, out);
            return;
        }
        for suffix in CONTRACTION_SUFFIXES {
            if lower.len() > suffix.len() && lower.ends_with(suffix) {
                let cut = end - suffix.len();
                push(text, start, cut, out);
                push(text, cut, end, out);
                return;
            }
        }
    }
    push(text, start, end, out);
}
