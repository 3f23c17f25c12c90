use serde::{Deserialize, Serialize};

use super::ratings::RatingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub alpha: f64,
    pub raters: usize,
    /// Items rated by at least two raters.
    pub items: usize,
    /// Values belonging to those items.
    pub pairable: usize,
}

/// Interval Krippendorff's α, `1 - D_o / D_e`, with squared-difference
/// distance. Items rated once carry no pairing information and are dropped.
///
/// Both disagreements are sums of squared differences over ordered value
/// pairs. For the interval metric such a sum over `m` values equals
/// `2m · Σ(v - mean)²`, which is how they are computed here:
///
/// ```text
/// D_o = (1/n) Σ_u 2 m_u SS_u / (m_u - 1)
/// D_e = 2 SS / (n - 1)
/// ```
pub fn krippendorff_alpha(table: &RatingTable) -> Result<AgreementReport> {
    let units: Vec<Vec<f64>> = table.by_output().into_values().filter(|vs| vs.len() >= 2).collect();
    if units.is_empty() {
        return Err(Error::InsufficientRaters);
    }
    let n: usize = units.iter().map(Vec::len).sum();
    let nf = n as f64;

    let mut d_o = 0.0;
    for unit in &units {
        let m = unit.len() as f64;
        d_o += 2.0 * m * sum_squares(unit) / (m - 1.0);
    }
    d_o /= nf;

    let pooled: Vec<f64> = units.iter().flatten().copied().collect();
    let d_e = 2.0 * sum_squares(&pooled) / (nf - 1.0);
    if d_e.is_nan() || d_e <= 0.0 {
        return Err(Error::UndefinedAgreement);
    }

    Ok(AgreementReport { alpha: 1.0 - d_o / d_e, raters: table.annotators().len(), items: units.len(), pairable: n })
}

fn sum_squares(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum()
}
