use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::edits::{categorize, Category};
use crate::error::{Error, Result};

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::UndefinedCorrelation(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One system output with its raw human ratings and a metric score.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgedOutput {
    pub id: String,
    pub category: Option<Category>,
    /// Raw 0-100 rating per annotator.
    pub ratings: BTreeMap<String, f64>,
    pub metric: f64,
}

impl JudgedOutput {
    pub fn mean_rating(&self) -> Option<f64> {
        if self.ratings.is_empty() {
            return None;
        }
        Some(self.ratings.values().sum::<f64>() / self.ratings.len() as f64)
    }
}

/// Outputs for the same input sentence. Pairs are only formed within a group.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceGroup {
    pub original: String,
    pub outputs: Vec<JudgedOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatus {
    Concordant,
    Discordant,
    Filtered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJudgment {
    pub first: String,
    pub second: String,
    /// Mean raw rating of `first` minus that of `second`.
    pub human_diff: f64,
    pub metric_diff: f64,
    pub status: PairStatus,
    /// Set when both outputs share a category.
    pub category: Option<Category>,
}

/// Judges every within-group pair. A pair survives the filter when the mean
/// raw ratings differ by more than `threshold` and every annotator who rated
/// both outputs orders them the same way as the means do. Surviving pairs on
/// which the metric ties are discordant.
pub fn judge_pairs(groups: &[SentenceGroup], threshold: f64) -> Vec<PairJudgment> {
    let mut out = Vec::new();
    for group in groups {
        let rated: Vec<(&JudgedOutput, f64)> =
            group.outputs.iter().filter_map(|o| o.mean_rating().map(|m| (o, m))).collect();
        for (i, &(a, ma)) in rated.iter().enumerate() {
            for &(b, mb) in &rated[i + 1..] {
                out.push(judge(a, ma, b, mb, threshold));
            }
        }
    }
    out
}

fn judge(a: &JudgedOutput, ma: f64, b: &JudgedOutput, mb: f64, threshold: f64) -> PairJudgment {
    let human_diff = ma - mb;
    let metric_diff = a.metric - b.metric;
    let unanimous = a.ratings.iter().all(|(annotator, ra)| match b.ratings.get(annotator) {
        Some(rb) => (ra - rb).signum() == human_diff.signum() && ra != rb,
        None => true,
    });
    let status = if human_diff.abs() <= threshold || !unanimous {
        PairStatus::Filtered
    } else if metric_diff != 0.0 && metric_diff.signum() == human_diff.signum() {
        PairStatus::Concordant
    } else {
        PairStatus::Discordant
    };
    let category = match (a.category, b.category) {
        (Some(x), Some(y)) if x == y => Some(x),
        _ => None,
    };
    PairJudgment { first: a.id.clone(), second: b.id.clone(), human_diff, metric_diff, status, category }
}

/// `(C - D) / (C + D)`.
pub fn tau(concordant: usize, discordant: usize) -> Result<f64> {
    let total = concordant + discordant;
    if total == 0 {
        return Err(Error::EmptyComparison);
    }
    Ok((concordant as f64 - discordant as f64) / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub tau_para: Option<f64>,
    pub tau_spl: Option<f64>,
    pub tau_all: f64,
    pub concordant: usize,
    pub discordant: usize,
    pub ci: Option<[f64; 2]>,
}

impl CorrelationReport {
    pub fn from_judgments(pairs: &[PairJudgment]) -> Result<Self> {
        let count = |cat: Option<Category>| {
            let mut c = (0, 0);
            for p in pairs.iter().filter(|p| cat.is_none() || p.category == cat) {
                match p.status {
                    PairStatus::Concordant => c.0 += 1,
                    PairStatus::Discordant => c.1 += 1,
                    PairStatus::Filtered => {}
                }
            }
            c
        };
        let (concordant, discordant) = count(None);
        let tau_all = tau(concordant, discordant)?;
        let by_category = |cat| {
            let (c, d) = count(Some(cat));
            tau(c, d).ok()
        };
        Ok(CorrelationReport {
            tau_para: by_category(Category::Paraphrase),
            tau_spl: by_category(Category::Split),
            tau_all,
            concordant,
            discordant,
            ci: None,
        })
    }

    /// Aligned two-column text rendering.
    pub fn to_table(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"));
        writeln!(f, "{:<12}{:>18}", "tau_para", opt(self.tau_para))?;
        writeln!(f, "{:<12}{:>18}", "tau_spl", opt(self.tau_spl))?;
        writeln!(f, "{:<12}{:>18}", "tau_all", format!("{:.4}", self.tau_all))?;
        writeln!(f, "{:<12}{:>18}", "concordant", self.concordant)?;
        writeln!(f, "{:<12}{:>18}", "discordant", self.discordant)?;
        let ci = self.ci.map_or_else(|| "-".to_string(), |[lo, hi]| format!("[{lo:.4}, {hi:.4}]"));
        writeln!(f, "{:<12}{:>18}", "ci", ci)
    }
}

pub fn kendall_tau_like(groups: &[SentenceGroup], threshold: f64) -> Result<CorrelationReport> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidConfig(format!("threshold must be nonnegative, got {threshold}")));
    }
    CorrelationReport::from_judgments(&judge_pairs(groups, threshold))
}

/// Builds sentence groups from a dataset and per-output metric scores.
///
/// Every rated instance needs a score. Categories come from the stored
/// annotation, falling back to [`categorize`]. Unrated instances are skipped.
pub fn sentence_groups(dataset: &Dataset, scores: &BTreeMap<String, f64>) -> Result<Vec<SentenceGroup>> {
    let missing: Vec<String> = dataset
        .instances
        .iter()
        .filter(|i| !i.ratings.is_empty() && !scores.contains_key(&i.id))
        .map(|i| i.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::record(&missing.join(", "), "score", "rated output has no metric score"));
    }
    let mut groups = Vec::new();
    for g in dataset.groups() {
        let mut outputs = Vec::new();
        for &idx in &g.members {
            let inst = &dataset.instances[idx];
            if inst.ratings.is_empty() {
                continue;
            }
            let category = match inst.category {
                Some(c) => Some(c),
                None => categorize(&inst.original, &inst.output).ok(),
            };
            outputs.push(JudgedOutput {
                id: inst.id.clone(),
                category,
                ratings: inst.ratings.iter().map(|r| (r.annotator.clone(), r.raw)).collect(),
                metric: scores[&inst.id],
            });
        }
        if !outputs.is_empty() {
            groups.push(SentenceGroup { original: g.original, outputs });
        }
    }
    Ok(groups)
}
