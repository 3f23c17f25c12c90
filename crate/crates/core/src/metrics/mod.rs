//! Reference-based deterministic metrics: SARI, BLEU and FKGL.

mod bleu;
mod fkgl;
mod sari;

use serde::{Deserialize, Serialize};

pub use bleu::bleu;
pub use fkgl::fkgl;
pub use sari::{sari, SariBreakdown, SariOperation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub name: String,
    pub value: f64,
    pub higher_is_better: bool,
}

impl MetricScore {
    pub(crate) fn new(name: &str, value: f64, higher_is_better: bool) -> Self {
        MetricScore { name: name.to_string(), value, higher_is_better }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sari,
    Bleu,
    Fkgl,
}

impl std::str::FromStr for Metric {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "sari" => Ok(Metric::Sari),
            "bleu" => Ok(Metric::Bleu),
            "fkgl" => Ok(Metric::Fkgl),
            _ => Err(crate::Error::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

/// Tokenizes and scores one output. FKGL looks at the output only.
pub fn score_strings<S: AsRef<str>>(metric: Metric, original: &str, output: &str, references: &[S]) -> crate::Result<f64> {
    use crate::textproc::tokenize;
    let refs = || references.iter().map(|r| tokenize(r.as_ref())).collect::<Vec<_>>();
    match metric {
        Metric::Sari => Ok(sari(&tokenize(original), &tokenize(output), &refs())?.score),
        Metric::Bleu => Ok(bleu(&tokenize(output), &refs())?.value),
        Metric::Fkgl => Ok(fkgl(output)?.value),
    }
}
