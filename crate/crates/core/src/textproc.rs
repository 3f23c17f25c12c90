//! Deterministic text primitives: tokenization, sentence splitting, n-gram
//! extraction, syllable counting and compression ratio.
//!
//! Tokenization is rule based. Text is split on whitespace, then leading and
//! trailing punctuation characters are detached one per token. Word-internal
//! punctuation (hyphens, apostrophes, decimal points) stays attached, so
//! `"well-known"` is a single token.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Highest n-gram order used by the n-gram metrics.
pub const MAX_NGRAM_ORDER: usize = 4;

/// Version tag of this tokenizer, recorded in dataset headers.
pub const TOKENIZER_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

/// An ordered token list with contiguous 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<Token>,
}

impl TokenSequence {
    /// Builds a sequence from pre-split words. Empty strings are skipped so the
    /// non-empty invariant holds.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = words
            .into_iter()
            .map(Into::into)
            .filter(|w: &String| !w.is_empty())
            .enumerate()
            .map(|(index, text)| Token { text, index })
            .collect();
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(|t| t.text.as_str())
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> + '_ {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    /// Lowercased token texts, as used by every metric and by the aligner.
    pub fn folded(&self) -> Vec<String> {
        self.texts().map(str::to_lowercase).collect()
    }

    /// Joins tokens with single spaces.
    pub fn detokenize(&self) -> String {
        self.texts().collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detokenize())
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

pub fn tokenize(text: &str) -> TokenSequence {
    let mut words = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars.iter().position(|&c| !is_punct(c));
        let Some(start) = start else {
            // all punctuation
            words.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|&c| !is_punct(c)).unwrap() + 1;
        words.extend(chars[..start].iter().map(|c| c.to_string()));
        words.push(chars[start..end].iter().collect::<String>());
        words.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    TokenSequence::from_words(words)
}

/// Abbreviations after which a terminal period does not end a sentence.
#[derive(Debug, Clone)]
pub struct AbbreviationList {
    entries: HashSet<String>,
}

impl AbbreviationList {
    /// The list shipped in `data/abbreviations.txt`.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../data/abbreviations.txt"))
    }

    /// One abbreviation per line; blank lines and `#` comments are ignored.
    pub fn parse(contents: &str) -> Self {
        let entries = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        AbbreviationList { entries }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }
}

impl Default for AbbreviationList {
    fn default() -> Self {
        Self::builtin()
    }
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201D}', '\u{2019}', '\u{00BB}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201C}', '\u{2018}', '\u{00AB}'];

#[derive(Debug, Clone, Default)]
pub struct SentenceSplitter {
    abbreviations: AbbreviationList,
}

impl SentenceSplitter {
    pub fn new(abbreviations: AbbreviationList) -> Self {
        SentenceSplitter { abbreviations }
    }

    fn ends_sentence(&self, word: &str) -> bool {
        let core = word.trim_end_matches(CLOSERS);
        if !core.ends_with(['.', '!', '?']) {
            return false;
        }
        !self.abbreviations.contains(core.trim_start_matches(OPENERS))
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        let mut sentences = Vec::new();
        let mut start: Option<usize> = None;
        let mut offset = 0;
        // pieces are a word plus one trailing whitespace char, or lone whitespace
        for piece in text.split_inclusive(char::is_whitespace) {
            let begin = offset;
            offset += piece.len();
            let word = piece.trim_end();
            if word.is_empty() {
                continue;
            }
            let first = *start.get_or_insert(begin);
            if self.ends_sentence(word) {
                sentences.push(text[first..begin + word.len()].to_string());
                start = None;
            }
        }
        if let Some(first) = start {
            sentences.push(text[first..].trim_end().to_string());
        }
        sentences
    }
}

/// Splits with the built-in abbreviation list.
pub fn split_sentences(text: &str) -> Vec<String> {
    SentenceSplitter::default().split(text)
}

/// Case-folded n-gram multiset.
pub type NgramCounts = BTreeMap<Vec<String>, usize>;

pub fn ngrams(seq: &TokenSequence, n: usize) -> Result<NgramCounts> {
    if !(1..=MAX_NGRAM_ORDER).contains(&n) {
        return Err(Error::InvalidNgramOrder(n));
    }
    let folded = seq.folded();
    let mut counts = NgramCounts::new();
    for window in folded.windows(n) {
        *counts.entry(window.to_vec()).or_default() += 1;
    }
    Ok(counts)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Counts vowel groups (`y` counts as a vowel except word-initially), then
/// drops one for a silent terminal `e`. A consonant + `le` ending keeps its
/// syllable. Never returns less than 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if letters.is_empty() {
        return 1;
    }
    let mut groups = 0;
    let mut in_group = false;
    for (i, &c) in letters.iter().enumerate() {
        let vowel = is_vowel(c) && !(c == 'y' && i == 0);
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le && groups > 1 {
            groups -= 1;
        }
    }
    groups.max(1)
}

pub fn compression_ratio(original: &TokenSequence, output: &TokenSequence) -> Result<f64> {
    if original.is_empty() {
        return Err(Error::UndefinedRatio);
    }
    Ok(output.len() as f64 / original.len() as f64)
}
