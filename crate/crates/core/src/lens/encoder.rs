//! Text encoders producing the d-dimensional vectors fed to the scorer.
//!
//! Two encoders are available. The feature-hash encoder hashes character
//! 3- to 5-grams into a fixed number of signed buckets, appends a token
//! length feature and a punctuation count feature, and maps the result through
//! a trainable affine projection. The external-embedding encoder looks up
//! precomputed vectors (for example from a large pretrained model) by exact
//! text.

use std::collections::HashMap;
use std::hash::Hasher;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::Dense;
use crate::error::{Error, Result};
use crate::textproc::tokenize;

pub const MIN_DIMENSION: usize = 4;
const CHAR_NGRAM_ORDERS: std::ops::RangeInclusive<usize> = 3..=5;
const EXTRA_FEATURES: usize = 2;
const LENGTH_SCALE: f64 = 10.0;
const PUNCT_SCALE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EncoderConfig {
    FeatureHash { dim: usize, buckets: usize, seed: u64 },
    ExternalEmbedding { dim: usize, path: PathBuf },
}

impl EncoderConfig {
    pub fn feature_hash(dim: usize) -> Self {
        EncoderConfig::FeatureHash { dim, buckets: 256, seed: 0x5eed }
    }

    pub fn dim(&self) -> usize {
        match self {
            EncoderConfig::FeatureHash { dim, .. } | EncoderConfig::ExternalEmbedding { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < MIN_DIMENSION {
            return Err(Error::InvalidConfig(format!("encoder dimension {} is below {MIN_DIMENSION}", self.dim())));
        }
        if let EncoderConfig::FeatureHash { buckets: 0, .. } = self {
            return Err(Error::InvalidConfig("feature-hash encoder needs at least one bucket".into()));
        }
        Ok(())
    }
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::feature_hash(16)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHashEncoder {
    pub(crate) dim: usize,
    pub(crate) buckets: usize,
    pub(crate) seed: u64,
    pub(crate) projection: Dense,
}

impl FeatureHashEncoder {
    pub fn new<R: Rng>(dim: usize, buckets: usize, seed: u64, rng: &mut R) -> Self {
        let projection = Dense::glorot(buckets + EXTRA_FEATURES, dim, rng);
        FeatureHashEncoder { dim, buckets, seed, projection }
    }

    pub fn with_projection(dim: usize, buckets: usize, seed: u64, projection: Dense) -> Result<Self> {
        if projection.inputs() != buckets + EXTRA_FEATURES {
            return Err(Error::DimensionMismatch { expected: buckets + EXTRA_FEATURES, found: projection.inputs() });
        }
        if projection.outputs() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: projection.outputs() });
        }
        Ok(FeatureHashEncoder { dim, buckets, seed, projection })
    }

    pub fn feature_len(&self) -> usize {
        self.buckets + EXTRA_FEATURES
    }

    /// Raw, untrained feature vector: `buckets` signed hash counts scaled to
    /// roughly unit norm, then token length and punctuation count.
    pub fn features(&self, text: &str) -> Vec<f64> {
        let mut features = vec![0.0; self.feature_len()];
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut grams = 0usize;
        let mut buf = String::new();
        for n in CHAR_NGRAM_ORDERS {
            for window in chars.windows(n) {
                buf.clear();
                buf.extend(window);
                let mut hasher = FnvHasher::with_key(self.seed);
                hasher.write(buf.as_bytes());
                let h = hasher.finish();
                let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                features[(h % self.buckets as u64) as usize] += sign;
                grams += 1;
            }
        }
        if grams > 0 {
            let scale = 1.0 / (grams as f64).sqrt();
            features[..self.buckets].iter_mut().for_each(|f| *f *= scale);
        }
        let tokens = tokenize(text);
        let punct = tokens.texts().filter(|t| !t.chars().any(char::is_alphanumeric)).count();
        features[self.buckets] = tokens.len() as f64 / LENGTH_SCALE;
        features[self.buckets + 1] = punct as f64 / PUNCT_SCALE;
        features
    }

    pub fn project(&self, features: &[f64]) -> Vec<f64> {
        self.projection.forward(features)
    }

    pub fn projection(&self) -> &Dense {
        &self.projection
    }
}

/// Precomputed vectors keyed by exact text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEmbeddings {
    pub(crate) dim: usize,
    pub(crate) path: PathBuf,
    table: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    text: String,
    vector: Vec<f64>,
}

impl ExternalEmbeddings {
    /// Reads a JSON-lines file of `{"text": ..., "vector": [...]}` records.
    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let mut table = HashMap::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: EmbeddingLine = serde_json::from_str(&line).map_err(|e| Error::parse(Some(i + 1), e))?;
            if record.vector.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: record.vector.len() });
            }
            table.insert(record.text, record.vector);
        }
        Ok(ExternalEmbeddings { dim, path: path.to_path_buf(), table })
    }

    pub fn from_table(dim: usize, table: HashMap<String, Vec<f64>>) -> Result<Self> {
        if let Some(v) = table.values().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        Ok(ExternalEmbeddings { dim, path: PathBuf::new(), table })
    }

    pub fn lookup(&self, text: &str) -> Result<&[f64]> {
        self.table.get(text).map(Vec::as_slice).ok_or_else(|| Error::MissingEmbedding(text.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    FeatureHash(FeatureHashEncoder),
    External(ExternalEmbeddings),
}

impl Encoder {
    /// Instantiates an encoder; the projection of a feature-hash encoder is
    /// initialised from `rng`.
    pub fn from_config<R: Rng>(config: &EncoderConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(match config {
            EncoderConfig::FeatureHash { dim, buckets, seed } => {
                Encoder::FeatureHash(FeatureHashEncoder::new(*dim, *buckets, *seed, rng))
            }
            EncoderConfig::ExternalEmbedding { dim, path } => Encoder::External(ExternalEmbeddings::load(path, *dim)?),
        })
    }

    pub fn config(&self) -> EncoderConfig {
        match self {
            Encoder::FeatureHash(e) => EncoderConfig::FeatureHash { dim: e.dim, buckets: e.buckets, seed: e.seed },
            Encoder::External(e) => EncoderConfig::ExternalEmbedding { dim: e.dim, path: e.path.clone() },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::FeatureHash(e) => e.dim,
            Encoder::External(e) => e.dim,
        }
    }

    pub fn encode(&self, text: &str) -> Result<Vec<f64>> {
        match self {
            Encoder::FeatureHash(e) => Ok(e.project(&e.features(text))),
            Encoder::External(e) => e.lookup(text).map(<[f64]>::to_vec),
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, Encoder::FeatureHash(_))
    }
}
