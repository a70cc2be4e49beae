//! Word, sentence and subword segmentation with byte-offset provenance.

mod sentences;
mod span;
mod subword;
mod words;

pub use sentences::{SentenceSplitter, DEFAULT_ABBREVIATIONS};
pub use span::{SpanKind, TextSpan};
pub use subword::{
    subword_tokenize, HashingTokenizer, Token, Tokenizer, TokenizerRegistry, MASK_MARKER,
    REFERENCE_TOKENIZER,
};
pub use words::split_words;

/// Splits `text` into sentences using the default abbreviation list.
pub fn split_sentences(text: &str) -> Vec<TextSpan> {
    SentenceSplitter::default().split(text)
}
