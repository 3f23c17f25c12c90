use super::MetricScore;
use crate::error::{Error, Result};
use crate::textproc::{count_syllables, split_sentences, tokenize};

/// Flesch-Kincaid grade level. Words are tokens with at least one
/// alphanumeric character; lower is simpler.
pub fn fkgl(text: &str) -> Result<MetricScore> {
    let tokens = tokenize(text);
    let words: Vec<&str> = tokens.texts().filter(|t| t.chars().any(char::is_alphanumeric)).collect();
    let sentences = split_sentences(text).len();
    if words.is_empty() || sentences == 0 {
        return Err(Error::UndefinedScore("FKGL needs at least one word and one sentence".into()));
    }
    let syllables: usize = words.iter().map(|w| count_syllables(w)).sum();
    let n_words = words.len() as f64;
    let value = 0.39 * (n_words / sentences as f64) + 11.8 * (syllables as f64 / n_words) - 15.59;
    Ok(MetricScore::new("fkgl", value, false))
}
