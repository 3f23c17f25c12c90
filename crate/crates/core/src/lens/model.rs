use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{Encoder, EncoderConfig, ExternalEmbeddings, FeatureHashEncoder};
use super::loss::{top_k_indices, LossConfig};
use super::nn::Dense;
use super::representation::build_representation;
use super::scorer::Scorer;
use crate::dataset::SimplificationInstance;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub k: LossConfig,
    pub seed: u64,
    pub epochs: usize,
    pub best_val_loss: Option<f64>,
    #[serde(default)]
    pub best_epoch: Option<usize>,
}

/// Per-reference scores of one output and their maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScores {
    pub scores: Vec<f64>,
    pub z_max: f64,
    /// First index attaining `z_max`.
    pub argmax: usize,
}

impl ReferenceScores {
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        let argmax = *top_k_indices(&scores, 1).first().ok_or(Error::MissingReferences)?;
        Ok(ReferenceScores { z_max: scores[argmax], argmax, scores })
    }
}

/// Encoder plus feedforward scorer. Immutable once trained; all scoring
/// methods take `&self`.
#[derive(Debug, Clone, PartialEq)]
pub struct LensModel {
    pub encoder: Encoder,
    pub scorer: Scorer,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum EncoderRepr {
    FeatureHash { dim: usize, buckets: usize, seed: u64, projection: Dense },
    ExternalEmbedding { dim: usize, path: PathBuf },
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    encoder: EncoderRepr,
    scorer: Scorer,
    meta: TrainingMeta,
}

impl LensModel {
    /// Freshly initialised model; weights drawn from a generator seeded with `seed`.
    pub fn new(encoder: &EncoderConfig, dropout: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Encoder::from_config(encoder, &mut rng)?;
        let scorer = Scorer::new(encoder.dim(), dropout, &mut rng);
        scorer.validate(encoder.dim())?;
        let meta = TrainingMeta { k: LossConfig::default(), seed, epochs: 0, best_val_loss: None, best_epoch: None };
        Ok(LensModel { encoder, scorer, meta })
    }

    pub fn from_parts(encoder: Encoder, scorer: Scorer, meta: TrainingMeta) -> Result<Self> {
        scorer.validate(encoder.dim())?;
        Ok(LensModel { encoder, scorer, meta })
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    /// Score of `output` against one reference.
    pub fn score_one(&self, original: &str, output: &str, reference: &str) -> Result<f64> {
        let c = self.encoder.encode(original)?;
        let s = self.encoder.encode(output)?;
        let r = self.encoder.encode(reference)?;
        Ok(self.scorer.forward(build_representation(&c, &s, &r)?.values()))
    }

    pub fn score_texts<S: AsRef<str>>(&self, original: &str, output: &str, references: &[S]) -> Result<ReferenceScores> {
        if references.is_empty() {
            return Err(Error::MissingReferences);
        }
        let c = self.encoder.encode(original)?;
        let s = self.encoder.encode(output)?;
        let scores = references
            .iter()
            .map(|r| {
                let r = self.encoder.encode(r.as_ref())?;
                Ok(self.scorer.forward(build_representation(&c, &s, &r)?.values()))
            })
            .collect::<Result<Vec<_>>>()?;
        ReferenceScores::from_scores(scores)
    }

    pub fn score(&self, instance: &SimplificationInstance) -> Result<ReferenceScores> {
        self.score_texts(&instance.original, &instance.output, &instance.references)
    }

    /// Trainable parameter slices: encoder projection (feature-hash only)
    /// weights and bias, then each scorer layer's weights and bias.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        if let Encoder::FeatureHash(e) = &mut self.encoder {
            out.extend(e.projection.params_mut());
        }
        for layer in &mut self.scorer.layers {
            out.extend(layer.params_mut());
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        let enc = match &self.encoder {
            Encoder::FeatureHash(e) => e.projection.params().iter().map(|p| p.len()).sum(),
            Encoder::External(_) => 0,
        };
        enc + self.scorer.layers.iter().flat_map(|l| l.params()).map(<[f64]>::len).sum::<usize>()
    }

    pub fn to_json(&self) -> Result<String> {
        let encoder = match &self.encoder {
            Encoder::FeatureHash(e) => EncoderRepr::FeatureHash {
                dim: e.dim,
                buckets: e.buckets,
                seed: e.seed,
                projection: e.projection.clone(),
            },
            Encoder::External(e) => EncoderRepr::ExternalEmbedding { dim: e.dim, path: e.path.clone() },
        };
        let file = ModelFile { version: MODEL_VERSION, encoder, scorer: self.scorer.clone(), meta: self.meta.clone() };
        serde_json::to_string(&file).map_err(|e| Error::parse(None, e))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(json).map_err(|e| Error::parse(None, e))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(MODEL_VERSION) => {}
            Some(v) => return Err(Error::UnsupportedModelVersion(v)),
            None => return Err(Error::parse(None, "missing numeric \"version\" field")),
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::parse(None, e))?;
        let encoder = match file.encoder {
            EncoderRepr::FeatureHash { dim, buckets, seed, projection } => {
                Encoder::FeatureHash(FeatureHashEncoder::with_projection(dim, buckets, seed, projection)?)
            }
            EncoderRepr::ExternalEmbedding { dim, path } => Encoder::External(ExternalEmbeddings::load(path, dim)?),
        };
        encoder.config().validate()?;
        LensModel::from_parts(encoder, file.scorer, file.meta)
    }
}

pub fn save_model(model: &LensModel, path: impl AsRef<Path>) -> Result<()> {
    let mut json = model.to_json()?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LensModel> {
    LensModel::from_json(&std::fs::read_to_string(path)?)
}
