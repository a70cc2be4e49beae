use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use super::symspell::SymSpell;
use crate::error::{Error, Result};
use crate::text::SentenceSplitter;

const BUNDLED_DICTIONARY: &str = include_str!("../../data/frequency_dictionary_en_82_765.txt");
const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon_en.tsv");

/// Word → synonym lemmas. Keys are lowercase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, Vec<String>>,
}

impl Lexicon {
    /// Parses `word<TAB>syn1,syn2,...` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, synonyms)) = line.split_once('\t') else {
                return Err(Error::Parse {
                    what: "lexicon",
                    line: i + 1,
                    reason: "expected `word<TAB>synonyms`".into(),
                });
            };
            let list = entries.entry(word.trim().to_lowercase()).or_default();
            for s in synonyms.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if !list.iter().any(|x| x == s) {
                    list.push(s.to_string());
                }
            }
        }
        entries.retain(|_, v| !v.is_empty());
        Ok(Lexicon { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a [&'a str])>) -> Self {
        Lexicon {
            entries: pairs
                .into_iter()
                .map(|(w, s)| (w.to_lowercase(), s.iter().map(|x| x.to_string()).collect()))
                .collect(),
        }
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon parses")
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.entries
            .get(&word.to_lowercase())
            .map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Speller over the bundled English frequency dictionary, edit distance 2.
/// Built once per process.
pub fn bundled_speller() -> Arc<SymSpell> {
    static SPELLER: OnceLock<Arc<SymSpell>> = OnceLock::new();
    SPELLER
        .get_or_init(|| {
            let mut s = SymSpell::new(2);
            s.load_dictionary(BUNDLED_DICTIONARY.as_bytes())
                .expect("bundled dictionary parses");
            Arc::new(s)
        })
        .clone()
}

/// Everything variant generation needs besides the tokenizer.
#[derive(Debug, Clone)]
pub struct PerturbResources {
    pub lexicon: Arc<Lexicon>,
    pub stopwords: Arc<StopWords>,
    pub speller: Arc<SymSpell>,
    pub sentences: Arc<SentenceSplitter>,
}

impl PerturbResources {
    pub fn bundled() -> Self {
        PerturbResources {
            lexicon: Arc::new(Lexicon::bundled()),
            stopwords: Arc::new(StopWords::bundled()),
            speller: bundled_speller(),
            sentences: Arc::new(SentenceSplitter::default()),
        }
    }
}
