use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::span::{SpanKind, TextSpan};
use crate::error::{Error, Result};

pub const REFERENCE_TOKENIZER: &str = "reference";

/// Placeholder substituted for masked spans when a tokenizer has no
/// reserved mask token of its own.
pub const MASK_MARKER: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub id: u32,
    pub span: TextSpan,
}

pub trait Tokenizer: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    fn encode(&self, text: &str) -> Vec<Token>;

    /// The literal text of the reserved mask token, if any.
    fn mask_token(&self) -> Option<&str> {
        None
    }

    fn vocab_size(&self) -> usize;
}

/// Deterministic subword tokenizer used by the reference scorer.
///
/// Text is cut into alphanumeric runs and single punctuation characters;
/// runs longer than `piece_chars` are broken into word pieces. Each
/// lowercased piece is hashed into a fixed vocabulary, continuation pieces
/// with a `##` prefix so they do not collide with word-initial pieces.
#[derive(Debug, Clone)]
pub struct HashingTokenizer {
    vocab_size: u32,
    piece_chars: usize,
}

impl HashingTokenizer {
    pub const PAD: u32 = 0;
    pub const BEGIN: u32 = 1;
    pub const SEP: u32 = 2;
    pub const END: u32 = 3;
    pub const MASK: u32 = 4;
    pub const RESERVED: u32 = 5;

    pub fn new(vocab_size: u32, piece_chars: usize) -> Self {
        assert!(vocab_size > Self::RESERVED && piece_chars > 0);
        HashingTokenizer {
            vocab_size,
            piece_chars,
        }
    }

    fn piece_id(&self, piece: &str, continuation: bool) -> u32 {
        // FNV-1a, 64-bit.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |b: u8| {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        if continuation {
            feed(b'#');
            feed(b'#');
        }
        for c in piece.chars().flat_map(char::to_lowercase) {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                feed(b);
            }
        }
        Self::RESERVED + (h % u64::from(self.vocab_size - Self::RESERVED)) as u32
    }

    fn push_run(&self, text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
        let run = &text[start..end];
        let bounds: Vec<usize> = run
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(run.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        let mut c = 0;
        while c < n_chars {
            let next = (c + self.piece_chars).min(n_chars);
            let (s, e) = (start + bounds[c], start + bounds[next]);
            out.push(Token {
                id: self.piece_id(&text[s..e], c > 0),
                span: TextSpan::new(text, s, e, SpanKind::Subword),
            });
            c = next;
        }
    }
}

impl Default for HashingTokenizer {
    fn default() -> Self {
        HashingTokenizer::new(8192, 4)
    }
}

impl Tokenizer for HashingTokenizer {
    fn id(&self) -> &str {
        REFERENCE_TOKENIZER
    }

    fn encode(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut run_start: Option<usize> = None;
        let mut iter = text.char_indices().peekable();
        while let Some((i, c)) = iter.next() {
            if c.is_alphanumeric() {
                run_start.get_or_insert(i);
                continue;
            }
            if let Some(s) = run_start.take() {
                self.push_run(text, s, i, &mut out);
            }
            if c.is_whitespace() {
                continue;
            }
            if c == '[' && text[i..].starts_with(MASK_MARKER) {
                let end = i + MASK_MARKER.len();
                out.push(Token {
                    id: Self::MASK,
                    span: TextSpan::new(text, i, end, SpanKind::Subword),
                });
                while iter.peek().is_some_and(|(j, _)| *j < end) {
                    iter.next();
                }
                continue;
            }
            let end = i + c.len_utf8();
            out.push(Token {
                id: self.piece_id(&text[i..end], false),
                span: TextSpan::new(text, i, end, SpanKind::Subword),
            });
        }
        if let Some(s) = run_start {
            self.push_run(text, s, text.len(), &mut out);
        }
        out
    }

    fn mask_token(&self) -> Option<&str> {
        Some(MASK_MARKER)
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size as usize
    }
}

/// Tokenizers by identifier. The reference tokenizer is always present.
#[derive(Debug, Clone)]
pub struct TokenizerRegistry {
    tokenizers: HashMap<String, Arc<dyn Tokenizer>>,
}

impl Default for TokenizerRegistry {
    fn default() -> Self {
        let mut tokenizers: HashMap<String, Arc<dyn Tokenizer>> = HashMap::new();
        tokenizers.insert(
            REFERENCE_TOKENIZER.to_string(),
            Arc::new(HashingTokenizer::default()),
        );
        TokenizerRegistry { tokenizers }
    }
}

impl TokenizerRegistry {
    pub fn register(&mut self, tokenizer: Arc<dyn Tokenizer>) {
        self.tokenizers.insert(tokenizer.id().to_string(), tokenizer);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Tokenizer>> {
        self.tokenizers
            .get(id)
            .cloned()
            .ok_or_else(|| Error::TokenizerNotRegistered(id.to_string()))
    }
}

pub fn subword_tokenize(
    text: &str,
    tokenizer_id: &str,
    registry: &TokenizerRegistry,
) -> Result<Vec<TextSpan>> {
    Ok(registry
        .get(tokenizer_id)?
        .encode(text)
        .into_iter()
        .map(|t| t.span)
        .collect())
}
