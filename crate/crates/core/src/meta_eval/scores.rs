use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a metric score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub id: String,
    pub score: f64,
}

/// Parses JSON-lines `{"id","score"}`. When `known` is given every id must be
/// in it; all offenders are reported together.
pub fn parse_metric_scores(contents: &str, known: Option<&HashSet<&str>>) -> Result<BTreeMap<String, f64>> {
    let mut scores = BTreeMap::new();
    let mut unknown = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ScoreLine = serde_json::from_str(line).map_err(|e| Error::parse(Some(i + 1), e))?;
        if let Some(known) = known {
            if !known.contains(entry.id.as_str()) {
                unknown.push(entry.id);
                continue;
            }
        }
        if scores.insert(entry.id.clone(), entry.score).is_some() {
            return Err(Error::DuplicateId(entry.id));
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownIds(unknown));
    }
    Ok(scores)
}

pub fn ingest_metric_scores(path: impl AsRef<Path>, known: Option<&HashSet<&str>>) -> Result<BTreeMap<String, f64>> {
    parse_metric_scores(&std::fs::read_to_string(path)?, known)
}

pub fn write_metric_scores(scores: &[ScoreLine]) -> String {
    let mut out = String::new();
    for s in scores {
        out.push_str(&serde_json::to_string(s).expect("score line serializes"));
        out.push('\n');
    }
    out
}
