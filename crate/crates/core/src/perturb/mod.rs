//! Summary perturbation: synonym replacement, sentence and token masking,
//! and three spelling-correction variants, each re-scored against the
//! unchanged source.

mod engine;
pub mod grammar;
mod resources;
pub mod symspell;
mod variants;

pub use engine::{run_perturbation, word_underline_value, PerturbationReport, Variant};
pub use grammar::GrammarMode;
pub use resources::{bundled_speller, Lexicon, PerturbResources, StopWords};
pub use symspell::{SymSpell, Verbosity};
pub use variants::{generate_variants, mask_spans, Method, Perturbation};
