//! Token alignment, typed edit extraction and output categorization for the
//! first two Rank & Rate steps.
//!
//! Alignment is a longest-common-subsequence match over case-folded tokens.
//! Unmatched tokens between two consecutive matched anchors form a gap; a gap
//! with unmatched tokens on both sides becomes one paraphrase edit, a gap with
//! only original tokens a deletion edit, and an unmatched output `"."` a
//! split edit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{compression_ratio, split_sentences, tokenize, TokenSequence};

/// Outputs whose token compression ratio is below this are deletion-focused.
pub const DELETION_RATIO_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Paraphrase,
    Split,
    Deletion,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Paraphrase, Category::Split, Category::Deletion];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Paraphrase => "paraphrase",
            Category::Split => "split",
            Category::Deletion => "deletion",
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-focused", self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.strip_suffix("-focused").unwrap_or(s);
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown category {s:?}")))
    }
}

/// Half-open token range `[start, end)`, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditType {
    Deletion,
    Paraphrase,
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditAnnotation {
    #[serde(rename = "type")]
    pub kind: EditType,
    pub orig_span: Option<Span>,
    pub out_span: Option<Span>,
}

impl EditAnnotation {
    pub fn deletion(orig: Span) -> Self {
        EditAnnotation { kind: EditType::Deletion, orig_span: Some(orig), out_span: None }
    }

    pub fn paraphrase(orig: Option<Span>, out: Span) -> Self {
        EditAnnotation { kind: EditType::Paraphrase, orig_span: orig, out_span: Some(out) }
    }

    pub fn split(out_index: usize) -> Self {
        EditAnnotation { kind: EditType::Split, orig_span: None, out_span: Some(Span::new(out_index, out_index + 1)) }
    }

    /// Checks type invariants and span bounds against the tokenized texts.
    pub fn validate(&self, original: &TokenSequence, output: &TokenSequence) -> std::result::Result<(), String> {
        let check = |span: &Span, len: usize, side: &str| {
            if span.start >= span.end || span.end > len {
                Err(format!("{side} span [{}, {}) outside 0..{len}", span.start, span.end))
            } else {
                Ok(())
            }
        };
        if let Some(s) = &self.orig_span {
            check(s, original.len(), "original")?;
        }
        if let Some(s) = &self.out_span {
            check(s, output.len(), "output")?;
        }
        match (self.kind, &self.orig_span, &self.out_span) {
            (EditType::Deletion, Some(_), None) => Ok(()),
            (EditType::Deletion, _, _) => Err("deletion edits carry an original span only".into()),
            (EditType::Split, None, Some(s)) if s.len() == 1 && output.get(s.start) == Some(".") => Ok(()),
            (EditType::Split, _, _) => Err("split edits cover exactly one output period".into()),
            (EditType::Paraphrase, _, Some(_)) => Ok(()),
            (EditType::Paraphrase, _, None) => Err("paraphrase edits need an output span".into()),
        }
    }
}

/// Monotone one-to-one token matching between an original and an output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    /// `(original index, output index)`, increasing in both coordinates.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_original: Vec<usize>,
    pub unmatched_output: Vec<usize>,
}

impl Alignment {
    /// Builds an alignment from matches alone, deriving the unmatched lists.
    pub fn from_matches(matches: Vec<(usize, usize)>, original_len: usize, output_len: usize) -> Self {
        let unmatched = |len: usize, taken: Vec<usize>| (0..len).filter(|i| !taken.contains(i)).collect();
        let unmatched_original = unmatched(original_len, matches.iter().map(|m| m.0).collect());
        let unmatched_output = unmatched(output_len, matches.iter().map(|m| m.1).collect());
        Alignment { matches, unmatched_original, unmatched_output }
    }

    fn check(&self, original_len: usize, output_len: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InconsistentAlignment(msg));
        for pair in self.matches.windows(2) {
            if pair[1].0 <= pair[0].0 || pair[1].1 <= pair[0].1 {
                return bad(format!("matches {:?} and {:?} cross or repeat", pair[0], pair[1]));
            }
        }
        if let Some(&(o, s)) = self.matches.iter().find(|&&(o, s)| o >= original_len || s >= output_len) {
            return bad(format!("match ({o}, {s}) out of range"));
        }
        let expected = Alignment::from_matches(self.matches.clone(), original_len, output_len);
        if expected.unmatched_original != self.unmatched_original || expected.unmatched_output != self.unmatched_output {
            return bad("unmatched index lists disagree with matches".into());
        }
        Ok(())
    }
}

/// LCS alignment over case-folded tokens. Among optimal alignments the one
/// with the earliest matches is chosen.
pub fn align(original: &TokenSequence, output: &TokenSequence) -> Alignment {
    let a = original.folded();
    let b = output.folded();
    let (n, m) = (a.len(), b.len());
    // suffix table: lcs[i][j] = LCS length of a[i..] and b[j..]
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] { lcs[i + 1][j + 1] + 1 } else { lcs[i + 1][j].max(lcs[i][j + 1]) };
        }
    }
    let mut matches = Vec::with_capacity(lcs[0][0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            matches.push((i, j));
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Alignment::from_matches(matches, n, m)
}

/// Typed edits implied by an alignment of `original` and `output`.
pub fn extract_edits(alignment: &Alignment, original: &TokenSequence, output: &TokenSequence) -> Result<Vec<EditAnnotation>> {
    alignment.check(original.len(), output.len())?;
    let mut edits = Vec::new();
    // anchors bracket each gap; sentinels at both ends
    let mut prev = (0usize, 0usize);
    let ends = alignment.matches.iter().map(|&(o, s)| (o, s)).chain(std::iter::once((original.len(), output.len())));
    for (next_o, next_s) in ends {
        let orig_gap = Span::new(prev.0, next_o);
        let out_gap = prev.1..next_s;

        let mut runs: Vec<Span> = Vec::new();
        let mut periods = Vec::new();
        let mut run_start = None;
        for idx in out_gap.clone() {
            if output.get(idx) == Some(".") {
                if let Some(start) = run_start.take() {
                    runs.push(Span::new(start, idx));
                }
                periods.push(idx);
            } else if run_start.is_none() {
                run_start = Some(idx);
            }
        }
        if let Some(start) = run_start {
            runs.push(Span::new(start, out_gap.end));
        }

        let mut gap_edits: Vec<(usize, EditAnnotation)> = Vec::new();
        let mut runs = runs.into_iter();
        if !orig_gap.is_empty() {
            match runs.next() {
                Some(run) => gap_edits.push((run.start, EditAnnotation::paraphrase(Some(orig_gap), run))),
                None => gap_edits.push((out_gap.start, EditAnnotation::deletion(orig_gap))),
            }
        }
        gap_edits.extend(runs.map(|run| (run.start, EditAnnotation::paraphrase(None, run))));
        gap_edits.extend(periods.into_iter().map(|p| (p, EditAnnotation::split(p))));
        gap_edits.sort_by_key(|(pos, e)| (*pos, e.kind != EditType::Deletion));
        edits.extend(gap_edits.into_iter().map(|(_, e)| e));

        prev = (next_o + 1, next_s + 1);
    }
    Ok(edits)
}

/// True when `output` is a proper in-order subsequence of `original`
/// (case-folded), i.e. obtainable by deleting at least one word.
pub fn is_pure_deletion(original: &TokenSequence, output: &TokenSequence) -> bool {
    if output.len() >= original.len() {
        return false;
    }
    let orig = original.folded();
    let mut it = orig.iter();
    output.folded().iter().all(|tok| it.any(|o| o == tok))
}

/// Machine-proposed category with priority split > deletion > paraphrase.
pub fn categorize(original: &str, output: &str) -> Result<Category> {
    let out_tokens = tokenize(output);
    if out_tokens.is_empty() {
        return Err(Error::EmptyOutput);
    }
    if split_sentences(output).len() > 1 {
        return Ok(Category::Split);
    }
    let orig_tokens = tokenize(original);
    let ratio = compression_ratio(&orig_tokens, &out_tokens)?;
    if ratio < DELETION_RATIO_THRESHOLD || is_pure_deletion(&orig_tokens, &out_tokens) {
        return Ok(Category::Deletion);
    }
    Ok(Category::Paraphrase)
}

/// Category and highlighted edits for one output, as shown to annotators.
pub fn annotate(original: &str, output: &str) -> Result<(Category, Vec<EditAnnotation>)> {
    let category = categorize(original, output)?;
    let (orig, out) = (tokenize(original), tokenize(output));
    let edits = extract_edits(&align(&orig, &out), &orig, &out)?;
    Ok((category, edits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSequence {
        tokenize(s)
    }

    fn edits(c: &str, s: &str) -> Vec<EditAnnotation> {
        let (c, s) = (seq(c), seq(s));
        extract_edits(&align(&c, &s), &c, &s).unwrap()
    }

    #[test]
    fn align_identical_and_disjoint() {
        let x = seq("a b c");
        let al = align(&x, &x);
        assert_eq!(al.matches, vec![(0, 0), (1, 1), (2, 2)]);
        assert!(al.unmatched_original.is_empty() && al.unmatched_output.is_empty());
        let al = align(&seq("a b"), &seq("c d e"));
        assert!(al.matches.is_empty());
        assert_eq!(al.unmatched_output, vec![0, 1, 2]);
    }

    #[test]
    fn align_hand_lcs() {
        let al = align(&seq("the quick brown fox"), &seq("the fast fox"));
        assert_eq!(al.matches, vec![(0, 0), (3, 2)]);
        assert_eq!(al.unmatched_original, vec![1, 2]);
        assert_eq!(al.unmatched_output, vec![1]);
    }

    #[test]
    fn align_is_case_insensitive_and_leftmost() {
        let al = align(&seq("A a"), &seq("a"));
        assert_eq!(al.matches, vec![(0, 0)]);
    }

    #[test]
    fn deletion_edit() {
        assert_eq!(edits("a b c", "a c"), vec![EditAnnotation::deletion(Span::new(1, 2))]);
    }

    #[test]
    fn split_and_paraphrase_edits() {
        assert_eq!(
            edits("a b", "a b . c d"),
            vec![EditAnnotation::split(2), EditAnnotation::paraphrase(None, Span::new(3, 5))]
        );
    }

    #[test]
    fn paraphrase_pairs_spans() {
        assert_eq!(
            edits("the quick fox", "the fast fox"),
            vec![EditAnnotation::paraphrase(Some(Span::new(1, 2)), Span::new(1, 2))]
        );
    }

    #[test]
    fn identity_has_no_edits() {
        assert!(edits("Some words here.", "Some words here.").is_empty());
    }

    #[test]
    fn deletion_next_to_split() {
        // "b" removed and a period inserted in the same gap
        assert_eq!(
            edits("a b c", "a . c"),
            vec![EditAnnotation::deletion(Span::new(1, 2)), EditAnnotation::split(1)]
        );
    }

    #[test]
    fn inconsistent_alignment_rejected() {
        let (c, s) = (seq("a b"), seq("a b"));
        let crossing = Alignment { matches: vec![(1, 0), (0, 1)], unmatched_original: vec![], unmatched_output: vec![] };
        assert!(matches!(extract_edits(&crossing, &c, &s), Err(Error::InconsistentAlignment(_))));
        let wrong_lists = Alignment { matches: vec![(0, 0)], unmatched_original: vec![], unmatched_output: vec![1] };
        assert!(extract_edits(&wrong_lists, &c, &s).is_err());
        let out_of_range = Alignment::from_matches(vec![(0, 5)], 2, 2);
        assert!(extract_edits(&out_of_range, &c, &s).is_err());
    }

    #[test]
    fn external_alignment_accepted() {
        // a non-LCS but consistent alignment, as a neural aligner might give
        let (c, s) = (seq("x y"), seq("y x"));
        let al = Alignment::from_matches(vec![(0, 1)], 2, 2);
        assert_eq!(
            extract_edits(&al, &c, &s).unwrap(),
            vec![EditAnnotation::paraphrase(None, Span::new(0, 1)), EditAnnotation::deletion(Span::new(1, 2))]
        );
    }

    #[test]
    fn categorize_rules() {
        assert_eq!(categorize("He ran and she hid.", "He ran. She hid.").unwrap(), Category::Split);
        let ten = "one two three four five six seven eight nine ten";
        assert_eq!(categorize(ten, "alpha beta gamma delta").unwrap(), Category::Deletion);
        assert_eq!(categorize(ten, "alpha beta gamma delta epsilon").unwrap(), Category::Paraphrase);
        assert_eq!(categorize(ten, "one three five seven nine ten").unwrap(), Category::Deletion);
        assert_eq!(categorize("the big dog", "the large dog").unwrap(), Category::Paraphrase);
        // an unchanged copy deletes nothing
        assert_eq!(categorize(ten, ten).unwrap(), Category::Paraphrase);
        assert!(matches!(categorize(ten, "  "), Err(Error::EmptyOutput)));
    }

    #[test]
    fn edit_validation() {
        let (c, s) = (seq("a b"), seq("a . b"));
        assert!(EditAnnotation::split(1).validate(&c, &s).is_ok());
        assert!(EditAnnotation::split(0).validate(&c, &s).is_err());
        assert!(EditAnnotation::deletion(Span::new(1, 3)).validate(&c, &s).is_err());
        let bad = EditAnnotation { kind: EditType::Deletion, orig_span: Some(Span::new(0, 1)), out_span: Some(Span::new(0, 1)) };
        assert!(bad.validate(&c, &s).is_err());
        assert!(EditAnnotation::paraphrase(None, Span::new(2, 3)).validate(&c, &s).is_ok());
    }

    #[test]
    fn category_parsing() {
        assert_eq!("split".parse::<Category>().unwrap(), Category::Split);
        assert_eq!("deletion-focused".parse::<Category>().unwrap(), Category::Deletion);
        assert_eq!(serde_json::to_string(&Category::Paraphrase).unwrap(), "\"paraphrase\"");
        assert!("other".parse::<Category>().is_err());
    }
}
