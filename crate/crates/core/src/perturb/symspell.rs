//! Symmetric-delete spelling correction, compound correction and word
//! segmentation over a word-frequency dictionary.
//!
//! Dictionary words are indexed by every string reachable from their
//! prefix with up to `max_edit` deletions; a lookup generates deletes of
//! the input and checks the candidates that share one, so inserts,
//! substitutions and transpositions never have to be enumerated.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

/// Word count of the corpus the bundled English dictionary was built from;
/// used to turn counts into probabilities.
pub const CORPUS_WORDS: f64 = 1_024_908_267_229.0;

const DEFAULT_PREFIX_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verbosity {
    /// The single best suggestion: smallest distance, then highest count.
    Top,
    /// All suggestions at the smallest distance found.
    Closest,
    /// Everything within the edit distance.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    pub term: String,
    pub distance: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Input split into pieces, characters unchanged.
    pub segmented: String,
    /// Pieces replaced by their best dictionary correction.
    pub corrected: String,
    pub distance_sum: usize,
    pub log_prob_sum: f64,
}

#[derive(Debug, Clone)]
pub struct SymSpell {
    max_edit: usize,
    prefix_len: usize,
    words: HashMap<String, u64>,
    terms: Vec<String>,
    deletes: HashMap<u64, Vec<u32>>,
    max_word_len: usize,
}

impl SymSpell {
    pub fn new(max_edit: usize) -> Self {
        SymSpell {
            max_edit,
            prefix_len: DEFAULT_PREFIX_LEN.max(max_edit + 1),
            words: HashMap::new(),
            terms: Vec::new(),
            deletes: HashMap::new(),
            max_word_len: 0,
        }
    }

    pub fn max_edit(&self) -> usize {
        self.max_edit
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn count(&self, word: &str) -> Option<u64> {
        self.words.get(word).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// Reads `word count` lines. Blank lines are skipped; anything else that
    /// does not parse is an error naming the line.
    pub fn load_dictionary(&mut self, reader: impl BufRead) -> Result<usize> {
        let mut added = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    what: "frequency dictionary",
                    line: i + 1,
                    reason: "expected `word count`".into(),
                });
            };
            let count: u64 = count.parse().map_err(|_| Error::Parse {
                what: "frequency dictionary",
                line: i + 1,
                reason: format!("bad count `{count}`"),
            })?;
            self.add_word(word, count);
            added += 1;
        }
        Ok(added)
    }

    pub fn from_file(path: impl AsRef<Path>, max_edit: usize) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut s = Self::new(max_edit);
        s.load_dictionary(std::io::BufReader::new(file))?;
        Ok(s)
    }

    pub fn add_word(&mut self, word: &str, count: u64) {
        let word = word.to_lowercase();
        if let Some(c) = self.words.get_mut(&word) {
            *c = c.saturating_add(count);
            return;
        }
        let chars: Vec<char> = word.chars().collect();
        self.max_word_len = self.max_word_len.max(chars.len());
        let id = self.terms.len() as u32;
        let prefix: Vec<char> = chars.iter().take(self.prefix_len).copied().collect();
        let mut seen = HashSet::new();
        let mut frontier = vec![prefix];
        seen.insert(hash_chars(&frontier[0]));
        for _ in 0..self.max_edit {
            let mut next = Vec::new();
            for cand in &frontier {
                if cand.is_empty() {
                    continue;
                }
                for i in 0..cand.len() {
                    let mut d = cand.clone();
                    d.remove(i);
                    if seen.insert(hash_chars(&d)) {
                        next.push(d);
                    }
                }
            }
            frontier = next;
        }
        for h in seen {
            self.deletes.entry(h).or_default().push(id);
        }
        self.words.insert(word.clone(), count);
        self.terms.push(word);
    }

    /// Suggestions for a single lowercase term within `max_edit` edits.
    pub fn lookup(&self, input: &str, verbosity: Verbosity, max_edit: usize) -> Vec<Suggestion> {
        let max_edit = max_edit.min(self.max_edit);
        let input_chars: Vec<char> = input.chars().collect();
        let input_len = input_chars.len();
        let mut suggestions: Vec<Suggestion> = Vec::new();
        if input_len > self.max_word_len + max_edit {
            return suggestions;
        }
        if let Some(&count) = self.words.get(input) {
            suggestions.push(Suggestion {
                term: input.to_string(),
                distance: 0,
                count,
            });
            if verbosity != Verbosity::All {
                return suggestions;
            }
        }
        if max_edit == 0 {
            return suggestions;
        }

        let mut considered_deletes: HashSet<Vec<char>> = HashSet::new();
        let mut considered: HashSet<u32> = HashSet::new();
        let mut best_distance = max_edit;
        let input_prefix: Vec<char> = input_chars.iter().take(self.prefix_len).copied().collect();
        let input_prefix_len = input_prefix.len();
        let mut candidates = vec![input_prefix];
        let mut cursor = 0;

        while cursor < candidates.len() {
            let candidate = candidates[cursor].clone();
            cursor += 1;
            let candidate_len = candidate.len();
            let len_diff = input_prefix_len - candidate_len;
            if len_diff > best_distance {
                if verbosity == Verbosity::All {
                    continue;
                }
                break;
            }

            if let Some(ids) = self.deletes.get(&hash_chars(&candidate)) {
                for &id in ids {
                    let term = &self.terms[id as usize];
                    if term == input {
                        continue;
                    }
                    let term_chars: Vec<char> = term.chars().collect();
                    let term_len = term_chars.len();
                    if term_len.abs_diff(input_len) > best_distance
                        || term_len < candidate_len
                        || (term_len == candidate_len && term_chars != candidate)
                    {
                        continue;
                    }
                    let term_prefix_len = term_len.min(self.prefix_len);
                    if term_prefix_len > input_prefix_len && term_prefix_len - candidate_len > best_distance {
                        continue;
                    }
                    if !considered.insert(id) {
                        continue;
                    }
                    let Some(distance) = osa_distance(&input_chars, &term_chars, best_distance) else {
                        continue;
                    };
                    let count = self.words[term];
                    if !suggestions.is_empty() {
                        match verbosity {
                            Verbosity::Closest if distance < best_distance => suggestions.clear(),
                            Verbosity::Top => {
                                let top = &suggestions[0];
                                if distance < top.distance || (distance == top.distance && count > top.count) {
                                    best_distance = distance;
                                    suggestions[0] = Suggestion {
                                        term: term.clone(),
                                        distance,
                                        count,
                                    };
                                }
                                continue;
                            }
                            _ => {}
                        }
                    }
                    if verbosity != Verbosity::All {
                        best_distance = distance;
                    }
                    suggestions.push(Suggestion {
                        term: term.clone(),
                        distance,
                        count,
                    });
                }
            }

            if len_diff < max_edit && candidate_len <= self.prefix_len {
                if verbosity != Verbosity::All && len_diff >= best_distance {
                    continue;
                }
                for i in 0..candidate_len {
                    let mut d = candidate.clone();
                    d.remove(i);
                    if considered_deletes.insert(d.clone()) {
                        candidates.push(d);
                    }
                }
            }
        }
        suggestions.sort_by(|a, b| {
            a.distance
                .cmp(&b.distance)
                .then(b.count.cmp(&a.count))
                .then(a.term.cmp(&b.term))
        });
        suggestions
    }

    fn unknown_count(term_len: usize) -> u64 {
        // Count an unseen word of this length would plausibly have.
        (10.0 / 10f64.powi(term_len as i32)).max(0.0) as u64
    }

    /// Whole-text correction that can also merge wrongly split words and
    /// split wrongly joined ones. Output is lowercase, single-spaced.
    pub fn lookup_compound(&self, input: &str, max_edit: usize) -> Suggestion {
        let terms: Vec<String> = input
            .split(|c: char| !(c.is_alphanumeric() || c == '\''))
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect();
        let mut parts: Vec<Suggestion> = Vec::new();
        let mut last_combined = false;

        for (i, term) in terms.iter().enumerate() {
            let suggestions = self.lookup(term, Verbosity::Top, max_edit);

            if i > 0 && !last_combined {
                let joined = format!("{}{}", terms[i - 1], term);
                let combined = self.lookup(&joined, Verbosity::Top, max_edit);
                if let Some(best_combined) = combined.first() {
                    let prev = parts.last().expect("one part per earlier term");
                    let this = suggestions.first().cloned().unwrap_or_else(|| Suggestion {
                        term: term.clone(),
                        distance: max_edit + 1,
                        count: Self::unknown_count(term.chars().count()),
                    });
                    let separate = prev.distance + this.distance;
                    let pair_count = (prev.count as f64 / CORPUS_WORDS) * this.count as f64;
                    if best_combined.distance + 1 < separate
                        || (best_combined.distance + 1 == separate && best_combined.count as f64 > pair_count)
                    {
                        let mut merged = best_combined.clone();
                        merged.distance += 1;
                        *parts.last_mut().unwrap() = merged;
                        last_combined = true;
                        continue;
                    }
                }
            }
            last_combined = false;

            let term_len = term.chars().count();
            if let Some(first) = suggestions.first() {
                if first.distance == 0 || term_len == 1 {
                    parts.push(first.clone());
                    continue;
                }
            }

            let mut best = suggestions.first().cloned();
            if term_len > 1 {
                let chars: Vec<char> = term.chars().collect();
                for j in 1..term_len {
                    let left: String = chars[..j].iter().collect();
                    let right: String = chars[j..].iter().collect();
                    let Some(l) = self.lookup(&left, Verbosity::Top, max_edit).into_iter().next() else {
                        continue;
                    };
                    let Some(r) = self.lookup(&right, Verbosity::Top, max_edit).into_iter().next() else {
                        continue;
                    };
                    let split = format!("{} {}", l.term, r.term);
                    let split_chars: Vec<char> = split.chars().collect();
                    let distance = osa_distance(&chars, &split_chars, max_edit).unwrap_or(max_edit + 1);
                    if let Some(b) = &best {
                        if distance > b.distance {
                            continue;
                        }
                        if distance < b.distance {
                            best = None;
                        }
                    }
                    let count = ((l.count as f64 / CORPUS_WORDS) * r.count as f64) as u64;
                    if best.as_ref().is_none_or(|b| count > b.count) {
                        best = Some(Suggestion {
                            term: split,
                            distance,
                            count,
                        });
                    }
                }
            }
            parts.push(best.unwrap_or_else(|| Suggestion {
                term: term.clone(),
                distance: max_edit + 1,
                count: Self::unknown_count(term_len),
            }));
        }

        let joined = parts.iter().map(|p| p.term.as_str()).collect::<Vec<_>>().join(" ");
        let input_chars: Vec<char> = input.to_lowercase().chars().collect();
        let joined_chars: Vec<char> = joined.chars().collect();
        let count = parts
            .iter()
            .fold(CORPUS_WORDS, |acc, p| acc * (p.count as f64 / CORPUS_WORDS)) as u64;
        Suggestion {
            distance: osa_distance(&input_chars, &joined_chars, usize::MAX).unwrap_or(usize::MAX),
            term: joined,
            count,
        }
    }

    /// Splits run-together text into words, choosing pieces that minimise
    /// the number of edited characters and then maximise the product of
    /// word probabilities. Existing spaces are kept as boundaries.
    pub fn word_segmentation(&self, input: &str, max_edit: usize, max_segment_len: usize) -> Segmentation {
        let chars: Vec<char> = input.chars().collect();
        let n = chars.len();
        let width = max_segment_len.min(n).max(1);
        if n == 0 {
            return Segmentation {
                segmented: String::new(),
                corrected: String::new(),
                distance_sum: 0,
                log_prob_sum: 0.0,
            };
        }
        #[derive(Clone, Default)]
        struct Composition {
            segmented: String,
            corrected: String,
            distance_sum: usize,
            log_prob_sum: f64,
        }
        let mut compositions = vec![Composition::default(); width];
        // Composition ending at input position `j` lives at `j % width`.
        let mut circular = width - 1;

        for j in 0..n {
            let imax = (n - j).min(max_segment_len);
            for i in 1..=imax {
                let mut part: Vec<char> = chars[j..j + i].to_vec();
                let mut separator_len = 0;
                let mut top_ed = 0;
                if part[0].is_whitespace() {
                    part.remove(0);
                } else {
                    separator_len = 1;
                }
                top_ed += part.len();
                part.retain(|c| !c.is_whitespace());
                top_ed -= part.len();
                if part.is_empty() {
                    continue;
                }
                let part_str: String = part.iter().collect();
                let lower = part_str.to_lowercase();
                let (top_result, log_prob) = match self.lookup(&lower, Verbosity::Top, max_edit).first() {
                    Some(s) => {
                        top_ed += s.distance;
                        (s.term.clone(), (s.count as f64 / CORPUS_WORDS).log10())
                    }
                    None => {
                        top_ed += part.len();
                        (lower, (10.0 / (CORPUS_WORDS * 10f64.powi(part.len() as i32))).log10())
                    }
                };
                let dest = (i + circular) % width;
                if j == 0 {
                    compositions[dest] = Composition {
                        segmented: part_str,
                        corrected: top_result,
                        distance_sum: top_ed,
                        log_prob_sum: log_prob,
                    };
                    continue;
                }
                let here = &compositions[circular];
                let there = &compositions[dest];
                let replace = i == max_segment_len
                    || ((here.distance_sum + top_ed == there.distance_sum
                        || here.distance_sum + separator_len + top_ed == there.distance_sum)
                        && there.log_prob_sum < here.log_prob_sum + log_prob)
                    || here.distance_sum + separator_len + top_ed < there.distance_sum;
                if replace {
                    compositions[dest] = Composition {
                        segmented: format!("{} {}", here.segmented, part_str),
                        corrected: format!("{} {}", here.corrected, top_result),
                        distance_sum: here.distance_sum + separator_len + top_ed,
                        log_prob_sum: here.log_prob_sum + log_prob,
                    };
                }
            }
            circular = (circular + 1) % width;
        }
        let best = compositions[circular].clone();
        Segmentation {
            segmented: best.segmented,
            corrected: best.corrected,
            distance_sum: best.distance_sum,
            log_prob_sum: best.log_prob_sum,
        }
    }
}

fn hash_chars(chars: &[char]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &c in chars {
        h ^= u64::from(c);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Optimal-string-alignment distance (Damerau-Levenshtein without repeated
/// edits of a substring). `None` when it exceeds `max`.
pub fn osa_distance(a: &[char], b: &[char], max: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    let m = b.len();
    let mut prev2: Vec<usize> = vec![0; m + 1];
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur: Vec<usize> = vec![0; m + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(prev2[j - 2] + 1);
            }
            cur[j] = v;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[m];
    (d <= max).then_some(d)
}
