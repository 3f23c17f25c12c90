use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub output: String,
    pub annotator: String,
    /// Raw 0-100 rating, or a normalized value after [`zscore_normalize`].
    pub value: f64,
    pub rank: Option<u32>,
}

/// Ratings in long form: one row per (output, annotator).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingTable {
    pub rows: Vec<RatingRow>,
}

impl RatingTable {
    pub fn new(rows: Vec<RatingRow>) -> Self {
        RatingTable { rows }
    }

    /// Convenience constructor from `(output, annotator, value)` triples.
    pub fn from_triples<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Self {
        RatingTable::new(
            triples
                .into_iter()
                .map(|(o, a, v)| RatingRow { output: o.into(), annotator: a.into(), value: v, rank: None })
                .collect(),
        )
    }

    /// Checks raw-scale bounds and (output, annotator) uniqueness.
    pub fn validate_raw(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for row in &self.rows {
            if !(row.value.is_finite() && (0.0..=100.0).contains(&row.value)) {
                return Err(Error::record(&row.output, "raw", format!("{} outside [0, 100]", row.value)));
            }
            if !seen.insert((row.output.as_str(), row.annotator.as_str())) {
                return Err(Error::record(&row.output, "annotator", format!("{:?} rated twice", row.annotator)));
            }
        }
        Ok(())
    }

    pub fn annotators(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.annotator.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    /// Values per output, in row order.
    pub fn by_output(&self) -> BTreeMap<&str, Vec<f64>> {
        let mut map: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for row in &self.rows {
            map.entry(&row.output).or_default().push(row.value);
        }
        map
    }
}

/// Standardizes each annotator's ratings by their own mean and population
/// standard deviation.
pub fn zscore_normalize(table: &RatingTable) -> Result<RatingTable> {
    let mut stats: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in &table.rows {
        stats.entry(&row.annotator).or_default().push(row.value);
    }
    let mut moments: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (annotator, values) in stats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if values.len() < 2 || std.is_nan() || std <= 0.0 {
            return Err(Error::DegenerateAnnotator(annotator.to_string()));
        }
        moments.insert(annotator, (mean, std));
    }
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let (mean, std) = moments[row.annotator.as_str()];
            RatingRow { value: (row.value - mean) / std, ..row.clone() }
        })
        .collect();
    Ok(RatingTable::new(rows))
}

/// Mean value per output.
pub fn aggregate(table: &RatingTable) -> Result<BTreeMap<String, f64>> {
    Ok(table
        .by_output()
        .into_iter()
        .map(|(id, vs)| (id.to_string(), vs.iter().sum::<f64>() / vs.len() as f64))
        .collect())
}

/// Mean value for each of `outputs`, failing on any output without ratings.
pub fn aggregate_outputs<S: AsRef<str>>(table: &RatingTable, outputs: &[S]) -> Result<Vec<f64>> {
    let means = aggregate(table)?;
    outputs
        .iter()
        .map(|id| means.get(id.as_ref()).copied().ok_or_else(|| Error::MissingRatings(id.as_ref().to_string())))
        .collect()
}
