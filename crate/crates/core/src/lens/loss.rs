//! The reference-adaptive loss: squared error against the `k` highest
//! predicted reference scores only.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// How many of the highest reference scores enter the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossConfig {
    TopK(usize),
    All,
}

impl LossConfig {
    pub fn resolve(self, available: usize) -> Result<usize> {
        match self {
            LossConfig::All if available > 0 => Ok(available),
            LossConfig::TopK(k) if k >= 1 && k <= available => Ok(k),
            LossConfig::TopK(k) => Err(Error::TopKOutOfRange { k, available }),
            LossConfig::All => Err(Error::MissingReferences),
        }
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig::TopK(3)
    }
}

impl std::str::FromStr for LossConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(LossConfig::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(LossConfig::TopK(k)),
            _ => Err(Error::InvalidConfig(format!("k must be a positive integer or \"all\", got {s:?}"))),
        }
    }
}

impl std::fmt::Display for LossConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossConfig::TopK(k) => write!(f, "{k}"),
            LossConfig::All => f.write_str("all"),
        }
    }
}

impl Serialize for LossConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LossConfig::TopK(k) => serializer.serialize_u64(*k as u64),
            LossConfig::All => serializer.serialize_str("all"),
        }
    }
}

impl<'de> Deserialize<'de> for LossConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(usize),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(k) if k >= 1 => Ok(LossConfig::TopK(k)),
            Repr::Num(_) => Err(serde::de::Error::custom("k must be positive")),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Indices of the `k` largest scores, in descending score order; equal
/// scores keep the lower index first.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Loss of one example: mean squared error between `h` and the top-k scores.
pub fn adaptive_loss(scores: &[f64], h: f64, k: LossConfig) -> Result<f64> {
    let k = k.resolve(scores.len())?;
    let sum: f64 = top_k_indices(scores, k).iter().map(|&i| (h - scores[i]).powi(2)).sum();
    Ok(sum / k as f64)
}

/// Mean of [`adaptive_loss`] over a batch of `(scores, h)` examples.
pub fn batch_adaptive_loss<'a, I>(examples: I, k: LossConfig) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let mut total = 0.0;
    let mut m = 0usize;
    for (scores, h) in examples {
        total += adaptive_loss(scores, h, k)?;
        m += 1;
    }
    if m == 0 {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    Ok(total / m as f64)
}
