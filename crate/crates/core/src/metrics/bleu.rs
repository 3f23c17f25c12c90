use std::collections::BTreeMap;

use super::MetricScore;
use crate::error::{Error, Result};
use crate::textproc::{ngrams, NgramCounts, TokenSequence, MAX_NGRAM_ORDER};

/// Length of the reference closest to `len`; ties go to the shorter one.
fn closest_reference_length(len: usize, references: &[TokenSequence]) -> usize {
    references
        .iter()
        .map(TokenSequence::len)
        .min_by_key(|&r| (r.abs_diff(len), r))
        .unwrap_or(0)
}

/// Sentence-level BLEU-4 on a 0-100 scale.
///
/// Modified n-gram precisions are clipped by the maximum count in any single
/// reference. Orders 2..4 use add-one smoothing; a zero unigram precision
/// yields 0.
pub fn bleu(output: &TokenSequence, references: &[TokenSequence]) -> Result<MetricScore> {
    if references.is_empty() {
        return Err(Error::MissingReferences);
    }
    if output.is_empty() {
        return Ok(MetricScore::new("bleu", 0.0, true));
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_NGRAM_ORDER {
        let hyp = ngrams(output, n)?;
        let mut max_ref: NgramCounts = BTreeMap::new();
        for reference in references {
            for (gram, count) in ngrams(reference, n)? {
                let slot = max_ref.entry(gram).or_default();
                *slot = (*slot).max(count);
            }
        }
        let matched: usize = hyp
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total: usize = hyp.values().sum();
        let precision = if n == 1 {
            if matched == 0 {
                return Ok(MetricScore::new("bleu", 0.0, true));
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += precision.ln();
    }
    let hyp_len = output.len();
    let ref_len = closest_reference_length(hyp_len, references);
    let brevity = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let value = 100.0 * brevity * (log_sum / MAX_NGRAM_ORDER as f64).exp();
    Ok(MetricScore::new("bleu", value, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::tokenize;

    fn score(s: &str, refs: &[&str]) -> f64 {
        let refs: Vec<_> = refs.iter().map(|r| tokenize(r)).collect();
        bleu(&tokenize(s), &refs).unwrap().value
    }

    #[test]
    fn perfect_match() {
        assert_eq!(score("the cat sat on the mat", &["the cat sat on the mat"]), 100.0);
        assert_eq!(score("a", &["a"]), 100.0);
    }

    #[test]
    fn no_shared_unigram() {
        assert_eq!(score("x y z", &["a b c"]), 0.0);
    }

    #[test]
    fn hand_computed_case() {
        // p1 = 3/4, p2 = 3/4, p3 = 2/3, p4 = 1/2 (smoothed), brevity 1
        let expected = 100.0 * (0.75f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
        let got = score("a b c d", &["a b c e"]);
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((got - 65.80370064762462).abs() < 1e-9);
    }

    #[test]
    fn brevity_penalty_applies() {
        let short = score("a b", &["a b c d"]);
        assert!(short < 100.0);
        let expected = 100.0 * (1.0f64 - 2.0).exp();
        assert!((short - expected).abs() < 1e-9);
    }

    #[test]
    fn empty_output_and_missing_refs() {
        assert_eq!(score("", &["a"]), 0.0);
        assert!(matches!(bleu(&tokenize("a"), &[]), Err(Error::MissingReferences)));
    }
}
