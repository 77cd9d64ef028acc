//! Deterministic text statistics: tokenization, sentence counting, a vowel
//! group syllable heuristic, Flesch-Kincaid grade level, n-gram
//! distributions and distinct-n.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("text contains no words")]
    NoWords,
    #[error("distribution is empty")]
    EmptyDistribution,
}

/// Lower-cased whitespace tokens with leading and trailing non-alphanumeric
/// characters stripped. Tokens that strip to nothing are dropped; internal
/// apostrophes and hyphens survive.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if core.is_empty() {
                None
            } else {
                Some(core.to_lowercase())
            }
        })
        .collect()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Number of sentences: segments between runs of `.`, `?`, `!` that hold at
/// least one token. A text with words but no terminator is one sentence;
/// a text without words has zero.
pub fn count_sentences(text: &str) -> usize {
    let n = text
        .split(is_terminator)
        .filter(|seg| !tokenize(seg).is_empty())
        .count();
    if n == 0 && !tokenize(text).is_empty() {
        1
    } else {
        n
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate, floored at 1.
///
/// Counts maximal runs of `a e i o u y`, then drops one for a terminal
/// silent `e`, except for a consonant + `le` ending ("table").
pub fn count_syllables(word: &str) -> usize {
    let w: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups: usize = 0;
    let mut prev_vowel = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = w.len();
    if n >= 1 && w[n - 1] == 'e' {
        let consonant_le =
            n >= 3 && w[n - 2] == 'l' && w[n - 3].is_alphabetic() && !is_vowel(w[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStats {
    pub n_words: usize,
    pub n_sentences: usize,
    pub n_syllables: usize,
    pub word_lengths: Vec<usize>,
}

impl TokenStats {
    pub fn of(text: &str) -> Self {
        let tokens = tokenize(text);
        Self {
            n_words: tokens.len(),
            n_sentences: count_sentences(text),
            n_syllables: tokens.iter().map(|t| count_syllables(t)).sum(),
            word_lengths: tokens.iter().map(|t| t.chars().count()).collect(),
        }
    }

    /// Pools two independent texts (sentences are not joined across them).
    pub fn merge(&mut self, other: &TokenStats) {
        self.n_words += other.n_words;
        self.n_sentences += other.n_sentences;
        self.n_syllables += other.n_syllables;
        self.word_lengths.extend_from_slice(&other.word_lengths);
    }

    pub fn flesch_kincaid_grade(&self) -> Result<f64, TextError> {
        if self.n_words == 0 {
            return Err(TextError::NoWords);
        }
        let words = self.n_words as f64;
        let sentences = self.n_sentences.max(1) as f64;
        let syllables = self.n_syllables as f64;
        Ok(0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59)
    }
}

/// Flesch-Kincaid grade level:
/// `0.39 * words/sentences + 11.8 * syllables/words - 15.59`.
pub fn flesch_kincaid_grade(text: &str) -> Result<f64, TextError> {
    TokenStats::of(text).flesch_kincaid_grade()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NGramOrder {
    Unigram,
    Bigram,
    Char,
}

/// Gram counts keyed in sorted order, so iteration and serialization are
/// deterministic. Bigram keys join their two tokens with one space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramDistribution {
    pub order: NGramOrder,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl NGramDistribution {
    pub fn empty(order: NGramOrder) -> Self {
        Self {
            order,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn add(&mut self, gram: String, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(gram).or_insert(0) += n;
        self.total += n;
    }

    /// Pools another distribution of the same order into this one.
    pub fn merge(&mut self, other: &NGramDistribution) {
        debug_assert_eq!(self.order, other.order);
        for (g, &n) in &other.counts {
            self.add(g.clone(), n);
        }
    }

    pub fn unique(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Word n-grams are counted per text (never across text boundaries) and
/// pooled. The character distribution uses the texts joined by a space,
/// lower-cased, with whitespace runs collapsed to one space and the ends
/// trimmed.
pub fn ngram_distribution<S: AsRef<str>>(texts: &[S], order: NGramOrder) -> NGramDistribution {
    let mut dist = NGramDistribution::empty(order);
    match order {
        NGramOrder::Unigram => {
            for t in texts {
                for tok in tokenize(t.as_ref()) {
                    dist.add(tok, 1);
                }
            }
        }
        NGramOrder::Bigram => {
            for t in texts {
                let toks = tokenize(t.as_ref());
                for pair in toks.windows(2) {
                    dist.add(format!("{} {}", pair[0], pair[1]), 1);
                }
            }
        }
        NGramOrder::Char => {
            let joined = texts.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
            let normalized = joined
                .to_lowercase()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            for c in normalized.chars() {
                dist.add(c.to_string(), 1);
            }
        }
    }
    dist
}

/// Unique grams over total grams.
pub fn distinct_n(dist: &NGramDistribution) -> Result<f64, TextError> {
    if dist.total == 0 {
        return Err(TextError::EmptyDistribution);
    }
    Ok(dist.unique() as f64 / dist.total as f64)
}

const STANDARD_PUNCTUATION: &[char] = &['.', ',', '?', '!', '\'', '"', '(', ')', '-', ':', ';'];

/// True if any character is not a letter, digit, whitespace or one of
/// `. , ? ! ' " ( ) - : ;`.
pub fn has_special_character(text: &str) -> bool {
    text.chars().any(|c| {
        !(c.is_alphabetic()
            || c.is_numeric()
            || c.is_whitespace()
            || STANDARD_PUNCTUATION.contains(&c))
    })
}
