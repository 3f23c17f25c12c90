use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{ngrams, TokenSequence, MAX_NGRAM_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SariOperation {
    Add,
    Keep,
    Delete,
}

/// Per-operation, per-order SARI components. Index 0 of each array is the
/// unigram component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SariBreakdown {
    pub add: [f64; MAX_NGRAM_ORDER],
    pub keep: [f64; MAX_NGRAM_ORDER],
    pub delete: [f64; MAX_NGRAM_ORDER],
    /// Mean of the three operation means, scaled to [0, 100].
    pub score: f64,
}

impl SariBreakdown {
    pub fn operation(&self, op: SariOperation) -> &[f64; MAX_NGRAM_ORDER] {
        match op {
            SariOperation::Add => &self.add,
            SariOperation::Keep => &self.keep,
            SariOperation::Delete => &self.delete,
        }
    }

    pub fn operation_mean(&self, op: SariOperation) -> f64 {
        self.operation(op).iter().sum::<f64>() / MAX_NGRAM_ORDER as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

type Gram = Vec<String>;

struct OrderComponents {
    add: f64,
    keep: f64,
    delete: f64,
}

/// Set-based SARI components for one n-gram order.
///
/// `ref_hits[g]` is the number of references containing `g`. Reference-side
/// keep weight of an input n-gram is `ref_hits / refs`, deletion weight is
/// `1 - ref_hits / refs`. A component whose system side and reference side
/// are both empty scores 1.
fn order_components(
    input: &BTreeSet<Gram>,
    output: &BTreeSet<Gram>,
    ref_hits: &BTreeMap<Gram, usize>,
    refs: usize,
) -> OrderComponents {
    let hits = |g: &Gram| ref_hits.get(g).copied().unwrap_or(0);
    let refs_f = refs as f64;

    // additions: binary indicators against the union of references
    let sys_add: Vec<&Gram> = output.difference(input).collect();
    let ref_add = ref_hits.keys().filter(|g| !input.contains(*g)).count();
    let add = if sys_add.is_empty() && ref_add == 0 {
        1.0
    } else {
        let good = sys_add.iter().filter(|g| hits(g) > 0).count() as f64;
        f1(ratio(good, sys_add.len() as f64), ratio(good, ref_add as f64))
    };

    let kept: Vec<&Gram> = input.intersection(output).collect();
    let ref_keep: usize = input.iter().map(hits).sum();
    let keep = if kept.is_empty() && ref_keep == 0 {
        1.0
    } else {
        let good: usize = kept.iter().map(|g| hits(g)).sum();
        let good = good as f64;
        f1(ratio(good, refs_f * kept.len() as f64), ratio(good, ref_keep as f64))
    };

    let deleted: Vec<&Gram> = input.difference(output).collect();
    let ref_delete: usize = input.iter().map(|g| refs - hits(g)).sum();
    let delete = if deleted.is_empty() && ref_delete == 0 {
        1.0
    } else {
        let good: usize = deleted.iter().map(|g| refs - hits(g)).sum();
        ratio(good as f64, refs_f * deleted.len() as f64)
    };

    OrderComponents { add, keep, delete }
}

fn gram_set(seq: &TokenSequence, n: usize) -> Result<BTreeSet<Gram>> {
    Ok(ngrams(seq, n)?.into_keys().collect())
}

/// SARI of `output` against `original` and `references`.
///
/// Add and keep are F1 scores, delete is precision. Multiple references are
/// combined with fractional occurrence weights.
pub fn sari(
    original: &TokenSequence,
    output: &TokenSequence,
    references: &[TokenSequence],
) -> Result<SariBreakdown> {
    if references.is_empty() {
        return Err(Error::MissingReferences);
    }
    if original.is_empty() {
        return Err(Error::UndefinedScore("SARI needs a non-empty original".into()));
    }
    let mut add = [0.0; MAX_NGRAM_ORDER];
    let mut keep = [0.0; MAX_NGRAM_ORDER];
    let mut delete = [0.0; MAX_NGRAM_ORDER];
    for n in 1..=MAX_NGRAM_ORDER {
        let input = gram_set(original, n)?;
        let out = gram_set(output, n)?;
        let mut ref_hits: BTreeMap<Gram, usize> = BTreeMap::new();
        for reference in references {
            for g in gram_set(reference, n)? {
                *ref_hits.entry(g).or_default() += 1;
            }
        }
        let c = order_components(&input, &out, &ref_hits, references.len());
        add[n - 1] = c.add;
        keep[n - 1] = c.keep;
        delete[n - 1] = c.delete;
    }
    let mut breakdown = SariBreakdown { add, keep, delete, score: 0.0 };
    let mean = (breakdown.operation_mean(SariOperation::Add)
        + breakdown.operation_mean(SariOperation::Keep)
        + breakdown.operation_mean(SariOperation::Delete))
        / 3.0;
    breakdown.score = mean * 100.0;
    Ok(breakdown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::tokenize;

    fn run(c: &str, s: &str, refs: &[&str]) -> SariBreakdown {
        let refs: Vec<_> = refs.iter().map(|r| tokenize(r)).collect();
        sari(&tokenize(c), &tokenize(s), &refs).unwrap()
    }

    #[test]
    fn identity_scores_100() {
        assert_eq!(run("a b c", "a b c", &["a b c"]).score, 100.0);
    }

    #[test]
    fn output_equal_to_reference_scores_100() {
        assert_eq!(run("the cat sat", "the dog sat", &["the dog sat"]).score, 100.0);
    }

    #[test]
    fn hand_counted_deletion_case() {
        // frozen from an independent set-based oracle (orders 1..4)
        let b = run("a b c d", "a b", &["a c"]);
        assert_eq!(b.add, [1.0, 0.0, 1.0, 1.0]);
        assert_eq!(b.keep, [0.5, 0.0, 1.0, 1.0]);
        assert_eq!(b.delete, [0.5, 1.0, 1.0, 1.0]);
        assert_eq!(b.score, 75.0);
    }

    #[test]
    fn casing_is_ignored() {
        assert_eq!(run("The Cat sat", "the cat SAT", &["THE CAT SAT"]).score, 100.0);
    }

    #[test]
    fn copy_is_penalised_when_references_rewrite() {
        let b = run("the feline sat on the mat", "the feline sat on the mat", &["the cat sat on the mat"]);
        assert!(b.score < 100.0);
        assert_eq!(b.add[0], 0.0);
    }

    #[test]
    fn fractional_keep_counts() {
        // "b" kept by one of two references: keep precision 1/2 at unigram level
        let b = run("a b", "a b", &["a b", "a"]);
        let kept_precision = (2.0 + 1.0) / (2.0 * 2.0);
        let kept_recall = 1.0;
        let expected = 2.0 * kept_precision * kept_recall / (kept_precision + kept_recall);
        assert_eq!(b.keep[0], expected);
    }

    #[test]
    fn errors() {
        let c = tokenize("a b");
        assert!(matches!(sari(&c, &c, &[]), Err(Error::MissingReferences)));
        assert!(sari(&TokenSequence::default(), &c, std::slice::from_ref(&c)).is_err());
    }
}
